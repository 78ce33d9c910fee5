use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use super::design::{DesignEncoder, NodeRow, SnrDesign};
use super::{SnrError, SnrSpec, LATTICE_TERM};
use crate::geograph::NodeId;
use crate::mmfit::{criteria, fit, Criteria, FitControl, FitResult};

pub const DEFAULT_LEVELS: [f64; 2] = [0.80, 0.95];

#[derive(Debug, Clone, PartialEq)]
pub struct SnrFit {
    pub spec: SnrSpec,
    pub encoder: DesignEncoder,
    pub result: FitResult,
    pub node_ids: Vec<NodeId>,
    pub offsets: DVector<f64>,
    /// h(η° − offset): the fitted intensity per unit length on the count
    /// route, the fitted mean intensity on the intensity route.
    pub fitted_intensity: DVector<f64>,
}

pub fn fit_snr(design: &SnrDesign, control: &FitControl) -> Result<SnrFit, SnrError> {
    let result = fit(&design.design, &design.spec.family, control)?;
    let fam = design.spec.family;
    let offsets = design.design.offset.clone();
    let fitted_intensity = DVector::from_fn(offsets.len(), |i, _| {
        fam.inverse_link(result.linear_predictor[i] - offsets[i])
    });
    Ok(SnrFit {
        spec: design.spec.clone(),
        encoder: design.encoder.clone(),
        result,
        node_ids: design.node_ids(),
        offsets,
        fitted_intensity,
    })
}

fn coef(v: f64) -> f64 {
    // aliased coefficients are reported as NaN but contribute nothing
    if v.is_nan() {
        0.0
    } else {
        v
    }
}

/// h(offset + linear predictor) for each row. A row carrying the exposure
/// offset of an observed node returns its fitted mean; with offset 0 it
/// returns the fitted intensity.
pub fn predict(fit: &SnrFit, rows: &[NodeRow]) -> Result<Vec<f64>, SnrError> {
    let enc = fit.encoder.encode(rows)?;
    let r = &fit.result;
    let gamma = DVector::from_iterator(r.fixed.len(), r.fixed.iter().map(|c| coef(c.estimate)));
    let xi = DVector::from_iterator(r.graph_stats.len(), r.graph_stats.iter().map(|c| coef(c.estimate)));
    let mut eta = &enc.fixed * gamma + &enc.graph * xi;
    for ((_, x), b) in enc.blocks.iter().zip(&r.blocks) {
        eta += x * &b.coefficients;
    }
    Ok(rows.iter().zip(eta.iter()).map(|(row, e)| r.family.inverse_link(row.offset + e)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothPoint {
    pub x: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// (level, lower, upper) per requested level.
    pub bands: Vec<(f64, f64, f64)>,
}

fn band(estimate: f64, se: f64, levels: &[f64]) -> Vec<(f64, f64, f64)> {
    let z = Normal::standard();
    levels
        .iter()
        .map(|&l| {
            let q = z.inverse_cdf(0.5 + l / 2.0);
            (l, estimate - q * se, estimate + q * se)
        })
        .collect()
}

fn check_levels(levels: &[f64]) -> Result<(), SnrError> {
    match levels.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        Some(&l) => Err(SnrError::InvalidLevel(l)),
        None => Ok(()),
    }
}

fn quadratic(row: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    (row.transpose() * cov * row)[(0, 0)].max(0.0)
}

/// Centered smooth f̂(x) on `grid` with pointwise Gaussian bands from the
/// posterior covariance of the block.
pub fn evaluate_smooth(fit: &SnrFit, term: &str, grid: &[f64], levels: &[f64]) -> Result<Vec<SmoothPoint>, SnrError> {
    check_levels(levels)?;
    let idx = fit.encoder.smooth_index(term).ok_or_else(|| SnrError::UnknownTerm(term.to_string()))?;
    let (config, centering) = fit.encoder.smooth(term).expect("index exists");
    let block = &fit.result.blocks[idx];
    grid.iter()
        .map(|&x| {
            let full = config
                .basis_row(x)
                .map_err(|source| SnrError::Smooth { term: term.to_string(), source })?;
            let row = DVector::from_vec(centering.constrain_row(&full));
            let estimate = row.dot(&block.coefficients);
            let std_error = quadratic(&row, &block.covariance).sqrt();
            Ok(SmoothPoint { x, estimate, std_error, bands: band(estimate, std_error, levels) })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionEffect {
    pub region: String,
    pub estimate: f64,
    pub std_error: f64,
    pub bands: Vec<(f64, f64, f64)>,
}

/// Estimated lattice effect f(α_s) per region.
pub fn lattice_effects(fit: &SnrFit, levels: &[f64]) -> Result<Vec<RegionEffect>, SnrError> {
    check_levels(levels)?;
    let (regions, centering) = fit.encoder.lattice().ok_or_else(|| SnrError::UnknownTerm(LATTICE_TERM.into()))?;
    let block = fit.result.blocks.last().expect("lattice block is last");
    Ok(regions
        .iter()
        .enumerate()
        .map(|(j, region)| {
            let mut unit = vec![0.0; regions.len()];
            unit[j] = 1.0;
            let row = DVector::from_vec(centering.constrain_row(&unit));
            let estimate = row.dot(&block.coefficients);
            let std_error = quadratic(&row, &block.covariance).sqrt();
            RegionEffect { region: region.clone(), estimate, std_error, bands: band(estimate, std_error, levels) }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub criteria: Criteria,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    /// Row index minimizing each criterion (first on ties).
    pub best_aic: usize,
    pub best_bic: usize,
    pub best_gcv: usize,
}

fn argmin(rows: &[ComparisonRow], key: impl Fn(&Criteria) -> f64) -> usize {
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if key(&r.criteria) < key(&rows[best].criteria) {
            best = i;
        }
    }
    best
}

pub fn compare_models(fits: &[&SnrFit]) -> Result<ComparisonTable, SnrError> {
    let Some(first) = fits.first() else {
        return Ok(ComparisonTable { rows: vec![], best_aic: 0, best_bic: 0, best_gcv: 0 });
    };
    for f in fits {
        if f.node_ids != first.node_ids || f.result.response != first.result.response {
            return Err(SnrError::ResponseMismatch);
        }
    }
    let rows = fits
        .iter()
        .map(|f| Ok(ComparisonRow { model: f.spec.name.clone(), criteria: criteria(&f.result)? }))
        .collect::<Result<Vec<_>, SnrError>>()?;
    Ok(ComparisonTable {
        best_aic: argmin(&rows, |c| c.aic),
        best_bic: argmin(&rows, |c| c.bic),
        best_gcv: argmin(&rows, |c| c.gcv),
        rows,
    })
}
