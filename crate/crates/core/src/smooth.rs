//! P-spline and lattice smoothing machinery: B-spline bases on equally spaced
//! knots, difference and Markov random field penalties, and the sum-to-zero
//! centering constraint.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmoothError {
    #[error("spline degree {0} is too large (max 10)")]
    DegreeTooLarge(usize),
    #[error("at least one inner knot is required")]
    NoInnerKnots,
    #[error("degenerate spline domain [{0}, {1}]")]
    DegenerateDomain(f64, f64),
    #[error("value {x} lies outside the spline domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },
    #[error("difference order {order} needs more than {order} coefficients, got {m}")]
    TooFewCoefficients { m: usize, order: usize },
    #[error("region '{0}' lists itself as a neighbour")]
    SelfNeighbour(String),
    #[error("adjacency is asymmetric: '{0}' lists '{1}' but not the reverse")]
    AsymmetricAdjacency(String, String),
    #[error("centering needs a basis with at least two columns")]
    TooFewColumns,
    #[error("centering constraint is rank deficient (all column means are zero)")]
    RankDeficientConstraint,
}

/// Spline of `degree` on `inner_knots + 1` equal intervals over `[lo, hi]`,
/// with a difference penalty of `order`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineConfig {
    pub degree: usize,
    pub inner_knots: usize,
    pub order: usize,
    pub lo: f64,
    pub hi: f64,
}

impl SplineConfig {
    pub const DEFAULT_DEGREE: usize = 3;
    pub const DEFAULT_INNER_KNOTS: usize = 20;
    pub const DEFAULT_ORDER: usize = 2;

    pub fn new(degree: usize, inner_knots: usize, order: usize, lo: f64, hi: f64) -> Result<Self, SmoothError> {
        if degree > 10 {
            return Err(SmoothError::DegreeTooLarge(degree));
        }
        if inner_knots == 0 {
            return Err(SmoothError::NoInnerKnots);
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(SmoothError::DegenerateDomain(lo, hi));
        }
        let cfg = SplineConfig { degree, inner_knots, order, lo, hi };
        if cfg.basis_count() <= order {
            return Err(SmoothError::TooFewCoefficients { m: cfg.basis_count(), order });
        }
        Ok(cfg)
    }

    /// Cubic, 20 inner knots, second-order differences.
    pub fn with_defaults(lo: f64, hi: f64) -> Result<Self, SmoothError> {
        Self::new(Self::DEFAULT_DEGREE, Self::DEFAULT_INNER_KNOTS, Self::DEFAULT_ORDER, lo, hi)
    }

    pub fn intervals(&self) -> usize {
        self.inner_knots + 1
    }

    /// Number of basis functions, degree + intervals.
    pub fn basis_count(&self) -> usize {
        self.degree + self.intervals()
    }

    fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.intervals() as f64
    }

    /// Full knot vector: the domain knots extended by `degree` equally spaced
    /// knots on each side.
    pub fn knots(&self) -> Vec<f64> {
        let h = self.spacing();
        let l = self.degree as f64;
        let r = self.intervals();
        (0..=r + 2 * self.degree)
            .map(|j| {
                // pin the domain ends exactly
                if j == self.degree {
                    self.lo
                } else if j == self.degree + r {
                    self.hi
                } else {
                    self.lo + (j as f64 - l) * h
                }
            })
            .collect()
    }

    /// Nonzero basis values at `x` and the index of the first one.
    pub fn local_basis(&self, x: f64) -> Result<(usize, Vec<f64>), SmoothError> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(SmoothError::OutsideDomain { x, lo: self.lo, hi: self.hi });
        }
        let t = self.knots();
        let l = self.degree;
        let last = l + self.intervals() - 1;
        let mut span = (l + ((x - self.lo) / self.spacing()).floor() as usize).min(last);
        while span < last && x >= t[span + 1] {
            span += 1;
        }
        while span > l && x < t[span] {
            span -= 1;
        }

        let mut values = vec![0.0; l + 1];
        let mut left = vec![0.0; l + 1];
        let mut right = vec![0.0; l + 1];
        values[0] = 1.0;
        for j in 1..=l {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        Ok((span - l, values))
    }

    pub fn basis_row(&self, x: f64) -> Result<Vec<f64>, SmoothError> {
        let mut row = vec![0.0; self.basis_count()];
        let (first, values) = self.local_basis(x)?;
        row[first..first + values.len()].copy_from_slice(&values);
        Ok(row)
    }
}

/// Design matrix with one row of basis evaluations per value of `x`.
pub fn bspline_basis(x: &[f64], config: &SplineConfig) -> Result<DMatrix<f64>, SmoothError> {
    let m = config.basis_count();
    let mut basis = DMatrix::zeros(x.len(), m);
    for (i, &xi) in x.iter().enumerate() {
        let (first, values) = config.local_basis(xi)?;
        for (j, v) in values.into_iter().enumerate() {
            basis[(i, first + j)] = v;
        }
    }
    Ok(basis)
}

/// Symmetric positive semidefinite penalty with a known null-space dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyMatrix {
    pub matrix: DMatrix<f64>,
    pub null_space_dim: usize,
}

impl PenaltyMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn quadratic_form(&self, beta: &DVector<f64>) -> f64 {
        beta.dot(&(&self.matrix * beta))
    }
}

/// Order-`order` difference operator on `m` coefficients, `(m - order) x m`.
pub fn difference_operator(m: usize, order: usize) -> Result<DMatrix<f64>, SmoothError> {
    if m <= order {
        return Err(SmoothError::TooFewCoefficients { m, order });
    }
    let mut d = DMatrix::<f64>::identity(m, m);
    for _ in 0..order {
        let rows = d.nrows() - 1;
        d = DMatrix::from_fn(rows, m, |i, j| d[(i + 1, j)] - d[(i, j)]);
    }
    Ok(d)
}

/// P-spline penalty DᵀD.
pub fn difference_penalty(m: usize, order: usize) -> Result<PenaltyMatrix, SmoothError> {
    let d = difference_operator(m, order)?;
    Ok(PenaltyMatrix { matrix: d.transpose() * &d, null_space_dim: order })
}

/// Symmetric, irreflexive neighbourhood structure over named regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeAdjacency {
    regions: Vec<String>,
    neighbors: Vec<BTreeSet<usize>>,
}

impl LatticeAdjacency {
    /// Builds from unordered neighbour pairs; `regions` may list regions that
    /// have no neighbours.
    pub fn from_pairs<S: AsRef<str>>(
        regions: impl IntoIterator<Item = S>,
        pairs: impl IntoIterator<Item = (S, S)>,
    ) -> Result<Self, SmoothError> {
        let mut lists: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for r in regions {
            lists.entry(r.as_ref().to_string()).or_default();
        }
        for (a, b) in pairs {
            let (a, b) = (a.as_ref().to_string(), b.as_ref().to_string());
            if a == b {
                return Err(SmoothError::SelfNeighbour(a));
            }
            lists.entry(a.clone()).or_default().insert(b.clone());
            lists.entry(b).or_default().insert(a);
        }
        Self::from_neighbor_lists(lists)
    }

    /// Builds from per-region neighbour lists, which must be symmetric.
    pub fn from_neighbor_lists<I, S>(lists: I) -> Result<Self, SmoothError>
    where
        I: IntoIterator<Item = (String, S)>,
        S: IntoIterator<Item = String>,
    {
        let lists: BTreeMap<String, BTreeSet<String>> =
            lists.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
        let mut regions: BTreeSet<String> = lists.keys().cloned().collect();
        regions.extend(lists.values().flatten().cloned());
        let regions: Vec<String> = regions.into_iter().collect();
        let index = |r: &str| regions.binary_search_by(|x| x.as_str().cmp(r)).unwrap();

        let mut neighbors = vec![BTreeSet::new(); regions.len()];
        for (a, nbrs) in &lists {
            for b in nbrs {
                if a == b {
                    return Err(SmoothError::SelfNeighbour(a.clone()));
                }
                if !lists.get(b).is_some_and(|back| back.contains(a)) {
                    return Err(SmoothError::AsymmetricAdjacency(a.clone(), b.clone()));
                }
                neighbors[index(a)].insert(index(b));
            }
        }
        Ok(LatticeAdjacency { regions, neighbors })
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn region_index(&self, region: &str) -> Option<usize> {
        self.regions.binary_search_by(|x| x.as_str().cmp(region)).ok()
    }

    pub fn neighbors(&self, i: usize) -> &BTreeSet<usize> {
        &self.neighbors[i]
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    fn component_count(&self) -> usize {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for root in 0..n {
            if seen[root] {
                continue;
            }
            count += 1;
            let mut stack = vec![root];
            seen[root] = true;
            while let Some(v) = stack.pop() {
                for &w in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }
}

/// Graph Laplacian of the lattice: neighbour counts on the diagonal, −1 for
/// each neighbour pair. Its null space holds the per-component constants.
pub fn mrf_penalty(adjacency: &LatticeAdjacency) -> PenaltyMatrix {
    let n = adjacency.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = adjacency.neighbors(i).len() as f64;
        for &j in adjacency.neighbors(i) {
            k[(i, j)] = -1.0;
        }
    }
    PenaltyMatrix { matrix: k, null_space_dim: adjacency.component_count() }
}

/// Reparametrization onto coefficient vectors whose fitted values have zero
/// sample mean. `basis` maps reduced coefficients to full ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Centering {
    transform: DMatrix<f64>,
}

impl Centering {
    /// Constraint from the observed basis column means.
    pub fn from_basis(basis: &DMatrix<f64>) -> Result<Self, SmoothError> {
        let m = basis.ncols();
        if m < 2 {
            return Err(SmoothError::TooFewColumns);
        }
        let n = basis.nrows().max(1) as f64;
        let means: DVector<f64> = DVector::from_iterator(m, basis.column_iter().map(|c| c.sum() / n));
        let norm = means.norm();
        if !(norm > 1e-12) {
            return Err(SmoothError::RankDeficientConstraint);
        }
        // Householder reflection whose first column is parallel to the means;
        // the remaining columns span their orthogonal complement.
        let mut u = means.clone();
        u[0] += norm.copysign(means[0]);
        let scale = 2.0 / u.norm_squared();
        let h = DMatrix::<f64>::identity(m, m) - (&u * u.transpose()) * scale;
        Ok(Centering { transform: h.columns(1, m - 1).into_owned() })
    }

    /// `m x (m - 1)` map from reduced to full coefficients.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.transform
    }

    pub fn constrain_basis(&self, basis: &DMatrix<f64>) -> DMatrix<f64> {
        basis * &self.transform
    }

    pub fn constrain_row(&self, row: &[f64]) -> Vec<f64> {
        let r = DVector::from_column_slice(row);
        (self.transform.transpose() * r).iter().copied().collect()
    }

    pub fn constrain_penalty(&self, penalty: &PenaltyMatrix) -> PenaltyMatrix {
        let matrix = self.transform.transpose() * &penalty.matrix * &self.transform;
        // the constant direction leaves the null space when it is present
        let null_space_dim = penalty.null_space_dim.saturating_sub(1);
        PenaltyMatrix { matrix: (&matrix + matrix.transpose()) * 0.5, null_space_dim }
    }

    pub fn back_transform(&self, reduced: &DVector<f64>) -> DVector<f64> {
        &self.transform * reduced
    }

    pub fn project(&self, full: &DVector<f64>) -> DVector<f64> {
        self.transform.transpose() * full
    }
}
