//! Mixed-model representation of a penalized block.
//!
//! With the spectral decomposition K = ΓΛΓᵀ, coefficients split as
//! β = X⁽ᵖ⁾β⁽ᵖ⁾ + X⁽q⁾β⁽q⁾ where X⁽ᵖ⁾ = Γ₊Λ₊^(−1/2) and X⁽q⁾ spans the null
//! space of K. Then βᵀKβ = β⁽ᵖ⁾ᵀβ⁽ᵖ⁾, so the penalized part becomes an i.i.d.
//! random effect and the null-space part a fixed effect.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::FitError;
use crate::smooth::PenaltyMatrix;

const RANK_TOLERANCE: f64 = 1e-9;
const NEGATIVE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct ReparamBlock {
    /// X⁺ = X X⁽ᵖ⁾
    pub penalized_design: DMatrix<f64>,
    /// X⁻ = X X⁽q⁾
    pub null_design: DMatrix<f64>,
    /// X⁽ᵖ⁾, m × rank(K)
    pub to_penalized: DMatrix<f64>,
    /// X⁽q⁾, m × (m − rank(K))
    pub to_null: DMatrix<f64>,
    /// Positive eigenvalues of K in decreasing order.
    pub eigenvalues: DVector<f64>,
    /// Eigenvectors matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl ReparamBlock {
    pub fn penalized_dim(&self) -> usize {
        self.to_penalized.ncols()
    }

    pub fn null_dim(&self) -> usize {
        self.to_null.ncols()
    }

    /// β from (β⁽ᵖ⁾, β⁽q⁾).
    pub fn combine(&self, penalized: &DVector<f64>, null: &DVector<f64>) -> DVector<f64> {
        &self.to_penalized * penalized + &self.to_null * null
    }

    /// (β⁽ᵖ⁾, β⁽q⁾) from β.
    pub fn split(&self, beta: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let sqrt = self.eigenvalues.map(f64::sqrt);
        let penalized = (self.eigenvectors.transpose() * beta).component_mul(&sqrt);
        let null = self.to_null.transpose() * beta;
        (penalized, null)
    }
}

pub fn reparametrize(design: &DMatrix<f64>, penalty: &PenaltyMatrix) -> Result<ReparamBlock, FitError> {
    let k = &penalty.matrix;
    let m = k.nrows();
    if k.ncols() != m || design.ncols() != m {
        return Err(FitError::DimensionMismatch(format!(
            "penalty is {}x{} but the design has {} columns",
            k.nrows(),
            k.ncols(),
            design.ncols()
        )));
    }
    let scale = k.amax().max(f64::MIN_POSITIVE);
    if (k - k.transpose()).amax() > 1e-10 * scale {
        return Err(FitError::MalformedPenalty("penalty matrix is not symmetric".into()));
    }

    let eig = SymmetricEigen::new(k.clone());
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&l, v)| (l, canonical_sign(v.into_owned())))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let largest = pairs.first().map_or(0.0, |p| p.0).max(0.0);
    if let Some(p) = pairs.iter().find(|p| p.0 < -NEGATIVE_TOLERANCE * largest.max(1.0)) {
        return Err(FitError::MalformedPenalty(format!("negative eigenvalue {:e}", p.0)));
    }
    let cut = RANK_TOLERANCE * largest;
    let rank = pairs.iter().filter(|p| largest > 0.0 && p.0 > cut).count();

    let eigenvalues = DVector::from_iterator(rank, pairs[..rank].iter().map(|p| p.0));
    let eigenvectors = column_matrix(m, &pairs[..rank]);
    let to_penalized = DMatrix::from_fn(m, rank, |i, j| eigenvectors[(i, j)] / eigenvalues[j].sqrt());
    let to_null = column_matrix(m, &pairs[rank..]);

    Ok(ReparamBlock {
        penalized_design: design * &to_penalized,
        null_design: design * &to_null,
        to_penalized,
        to_null,
        eigenvalues,
        eigenvectors,
    })
}

fn column_matrix(m: usize, pairs: &[(f64, DVector<f64>)]) -> DMatrix<f64> {
    DMatrix::from_fn(m, pairs.len(), |i, j| pairs[j].1[i])
}

/// Flips the vector so its largest-magnitude entry is positive.
fn canonical_sign(v: DVector<f64>) -> DVector<f64> {
    let pivot = v.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() + 1e-12 { x } else { acc });
    if pivot < 0.0 {
        -v
    } else {
        v
    }
}
