//! Penalized IWLS for the coefficients and REML Fisher scoring for the
//! variance parameters of the working linear mixed model.
//!
//! Every penalized block is reparametrized into an unpenalized null-space
//! part (treated like a fixed effect) and a penalized part with an i.i.d.
//! N(0, σ²_j) prior. With C the combined design, W the working weights and
//! G⁻¹ = blockdiag(0, I/σ²_j), the coefficients solve
//!
//! ```text
//! (CᵀWC/ψ + G⁻¹) θ = CᵀWz/ψ
//! ```
//!
//! and the REML score and expected information for σ²_j reduce to quantities
//! of H⁻¹ = (CᵀWC/ψ + G⁻¹)⁻¹, so no n × n matrix is ever formed.

use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::reparam::{reparametrize, ReparamBlock};
use super::{Family, FamilyKind, FitError};
use crate::smooth::PenaltyMatrix;

const LOG_VARIANCE_BOUND: f64 = 30.0;
const MAX_LOG_STEP: f64 = 2.0;
const RIDGE_JITTER: f64 = 1e-10;
const ALIAS_TOLERANCE: f64 = 1e-9;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedBlock {
    pub name: String,
    /// Centered design X_j.
    pub design: DMatrix<f64>,
    pub penalty: PenaltyMatrix,
}

/// Design of η = offset + Zγ + Wξ + Σ X_j β_j.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDesign {
    pub response: DVector<f64>,
    pub offset: DVector<f64>,
    /// Prior weights; unit weights when absent.
    pub weights: Option<DVector<f64>>,
    pub fixed: DMatrix<f64>,
    pub fixed_names: Vec<String>,
    pub graph_stats: DMatrix<f64>,
    pub graph_stat_names: Vec<String>,
    pub blocks: Vec<PenalizedBlock>,
}

impl ModelDesign {
    /// Design with only a response; add columns with the builder methods.
    pub fn new(response: DVector<f64>) -> Self {
        let n = response.len();
        ModelDesign {
            offset: DVector::zeros(n),
            response,
            weights: None,
            fixed: DMatrix::zeros(n, 0),
            fixed_names: vec![],
            graph_stats: DMatrix::zeros(n, 0),
            graph_stat_names: vec![],
            blocks: vec![],
        }
    }

    pub fn n_obs(&self) -> usize {
        self.response.len()
    }

    pub fn with_offset(mut self, offset: DVector<f64>) -> Self {
        self.offset = offset;
        self
    }

    pub fn with_weights(mut self, weights: DVector<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_intercept(self) -> Self {
        let n = self.n_obs();
        self.with_fixed("(Intercept)", DVector::from_element(n, 1.0))
    }

    pub fn with_fixed(mut self, name: &str, column: DVector<f64>) -> Self {
        self.fixed = append_column(&self.fixed, &column);
        self.fixed_names.push(name.to_string());
        self
    }

    pub fn with_graph_stat(mut self, name: &str, column: DVector<f64>) -> Self {
        self.graph_stats = append_column(&self.graph_stats, &column);
        self.graph_stat_names.push(name.to_string());
        self
    }

    pub fn with_block(mut self, name: &str, design: DMatrix<f64>, penalty: PenaltyMatrix) -> Self {
        self.blocks.push(PenalizedBlock { name: name.to_string(), design, penalty });
        self
    }

    pub fn validate(&self, family: &Family) -> Result<(), FitError> {
        let n = self.n_obs();
        if n == 0 {
            return Err(FitError::EmptyDesign);
        }
        let mismatch = |what: &str, got: usize| {
            Err(FitError::DimensionMismatch(format!("{what} has {got} rows, expected {n}")))
        };
        if self.offset.len() != n {
            return mismatch("offset", self.offset.len());
        }
        if let Some(w) = &self.weights {
            if w.len() != n {
                return mismatch("weights", w.len());
            }
            if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(FitError::InvalidResponse("prior weights must be positive and finite".into()));
            }
        }
        if self.fixed.nrows() != n {
            return mismatch("fixed-effect matrix", self.fixed.nrows());
        }
        if self.graph_stats.nrows() != n {
            return mismatch("graph-statistic matrix", self.graph_stats.nrows());
        }
        if self.fixed.ncols() != self.fixed_names.len() || self.graph_stats.ncols() != self.graph_stat_names.len() {
            return Err(FitError::DimensionMismatch("column names do not match matrix widths".into()));
        }
        for b in &self.blocks {
            if b.design.nrows() != n {
                return mismatch(&format!("block '{}'", b.name), b.design.nrows());
            }
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !finite(&self.fixed)
            || !finite(&self.graph_stats)
            || self.blocks.iter().any(|b| !finite(&b.design))
            || self.offset.iter().any(|v| !v.is_finite())
        {
            return Err(FitError::DimensionMismatch("design contains non-finite values".into()));
        }
        if self.fixed.ncols() + self.graph_stats.ncols() + self.blocks.len() == 0 {
            return Err(FitError::EmptyDesign);
        }
        family.validate_response(self.response.as_slice())
    }
}

fn append_column(m: &DMatrix<f64>, col: &DVector<f64>) -> DMatrix<f64> {
    let rows = if m.ncols() == 0 { col.len() } else { m.nrows() };
    let mut out = DMatrix::zeros(rows, m.ncols() + 1);
    if m.ncols() > 0 {
        out.columns_mut(0, m.ncols()).copy_from(m);
    }
    out.column_mut(m.ncols()).copy_from(col);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitControl {
    pub max_outer: usize,
    pub max_inner: usize,
    /// Relative coefficient change that ends an IWLS loop.
    pub iwls_tol: f64,
    /// Relative variance-parameter change that ends the outer loop.
    pub reml_tol: f64,
    pub initial_variance: f64,
    /// Fixes σ²_j per block instead of estimating it; `f64::INFINITY` turns
    /// the penalty off.
    pub fixed_variances: Option<Vec<f64>>,
}

impl Default for FitControl {
    fn default() -> Self {
        FitControl {
            max_outer: 200,
            max_inner: 100,
            iwls_tol: 1e-8,
            reml_tol: 1e-6,
            initial_variance: 1.0,
            fixed_variances: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientEstimate {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    /// Linearly dependent on earlier columns; estimate and error are NaN.
    pub aliased: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockFit {
    pub name: String,
    pub reparam: ReparamBlock,
    /// β⁽ᵖ⁾
    pub penalized: DVector<f64>,
    pub penalized_se: DVector<f64>,
    /// β⁽q⁾ (aliased entries are zero)
    pub null: DVector<f64>,
    pub null_se: DVector<f64>,
    /// β_j in the block's own basis.
    pub coefficients: DVector<f64>,
    /// Posterior covariance of β_j.
    pub covariance: DMatrix<f64>,
    pub variance: f64,
    pub edf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Convergence {
    pub converged: bool,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub final_change: f64,
    pub ridge_jitter: bool,
    /// One line per outer iteration.
    pub log: Vec<String>,
    /// (deviance, penalized deviance) after each step of the last IWLS loop.
    pub last_iwls_trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub family: Family,
    pub fixed: Vec<CoefficientEstimate>,
    pub graph_stats: Vec<CoefficientEstimate>,
    pub blocks: Vec<BlockFit>,
    pub scale: f64,
    pub edf: f64,
    pub deviance: f64,
    pub loglik: f64,
    pub n: usize,
    pub response: DVector<f64>,
    pub prior_weights: DVector<f64>,
    /// η including the offset.
    pub linear_predictor: DVector<f64>,
    pub fitted: DVector<f64>,
    pub convergence: Convergence,
}

impl FitResult {
    pub fn hat_trace(&self) -> f64 {
        self.edf
    }

    pub fn variances(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.variance).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    Fixed(usize),
    Graph(usize),
    Null(usize, usize),
    Penalized(usize, usize),
}

struct Problem {
    c: DMatrix<f64>,
    columns: Vec<Column>,
    /// Penalized column range per block within `c`.
    penalized: Vec<Range<usize>>,
    reparams: Vec<ReparamBlock>,
    y: DVector<f64>,
    offset: DVector<f64>,
    prior: DVector<f64>,
}

impl Problem {
    fn assemble(design: &ModelDesign) -> Result<Self, FitError> {
        let n = design.n_obs();
        let reparams = design
            .blocks
            .iter()
            .map(|b| reparametrize(&b.design, &b.penalty))
            .collect::<Result<Vec<_>, _>>()?;

        let mut candidates: Vec<(Column, DVector<f64>)> = vec![];
        for j in 0..design.fixed.ncols() {
            candidates.push((Column::Fixed(j), design.fixed.column(j).into_owned()));
        }
        for j in 0..design.graph_stats.ncols() {
            candidates.push((Column::Graph(j), design.graph_stats.column(j).into_owned()));
        }
        for (b, r) in reparams.iter().enumerate() {
            for k in 0..r.null_dim() {
                candidates.push((Column::Null(b, k), r.null_design.column(k).into_owned()));
            }
        }

        // Gram-Schmidt screen for unpenalized columns that add nothing new
        let mut basis: Vec<DVector<f64>> = vec![];
        let mut kept: Vec<(Column, DVector<f64>)> = vec![];
        for (col, v) in candidates {
            let norm = v.norm();
            let mut r = v.clone();
            for q in &basis {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
            let rn = r.norm();
            if norm > 0.0 && rn > ALIAS_TOLERANCE * norm {
                basis.push(r / rn);
                kept.push((col, v));
            }
        }

        let mut columns: Vec<Column> = kept.iter().map(|k| k.0).collect();
        let mut vectors: Vec<DVector<f64>> = kept.into_iter().map(|k| k.1).collect();
        let mut penalized = vec![];
        for (b, r) in reparams.iter().enumerate() {
            let start = columns.len();
            for k in 0..r.penalized_dim() {
                columns.push(Column::Penalized(b, k));
                vectors.push(r.penalized_design.column(k).into_owned());
            }
            penalized.push(start..columns.len());
        }
        let c = if vectors.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&vectors) };
        if c.ncols() == 0 {
            return Err(FitError::EmptyDesign);
        }

        Ok(Problem {
            c,
            columns,
            penalized,
            reparams,
            y: design.response.clone(),
            offset: design.offset.clone(),
            prior: design.weights.clone().unwrap_or_else(|| DVector::from_element(n, 1.0)),
        })
    }

    fn p(&self) -> usize {
        self.c.ncols()
    }

    fn precision(&self, variances: &[f64]) -> DVector<f64> {
        let mut prec = DVector::zeros(self.p());
        for (range, &s2) in self.penalized.iter().zip(variances) {
            for i in range.clone() {
                prec[i] = 1.0 / s2;
            }
        }
        prec
    }
}

struct WorkingModel {
    weights: DVector<f64>,
    response: DVector<f64>,
}

fn working_model(family: &Family, p: &Problem, eta: &DVector<f64>) -> Result<WorkingModel, FitError> {
    let n = eta.len();
    let mut weights = DVector::zeros(n);
    let mut response = DVector::zeros(n);
    for i in 0..n {
        let mu = family.inverse_link(eta[i]);
        let d = family.mu_eta(eta[i]);
        let w = p.prior[i] * d * d / family.variance(mu);
        if !w.is_finite() || !(w > 0.0) {
            return Err(FitError::NonFiniteWeights(i));
        }
        weights[i] = w;
        response[i] = eta[i] - p.offset[i] + (p.y[i] - mu) / d;
    }
    Ok(WorkingModel { weights, response })
}

struct Solved {
    theta: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    cwc: DMatrix<f64>,
}

/// Solves (CᵀWC + ψG⁻¹) θ = CᵀWz.
fn solve(
    p: &Problem,
    wm: &WorkingModel,
    prec: &DVector<f64>,
    scale: f64,
    jitter: &mut bool,
) -> Result<Solved, FitError> {
    let sw = wm.weights.map(f64::sqrt);
    let mut cw = p.c.clone();
    for (i, mut row) in cw.row_iter_mut().enumerate() {
        row *= sw[i];
    }
    let cwc = cw.transpose() * &cw;
    let rhs = cw.transpose() * wm.response.component_mul(&sw);
    let mut a = cwc.clone();
    for i in 0..a.nrows() {
        a[(i, i)] += scale * prec[i];
    }
    let chol = match Cholesky::new(a.clone()) {
        Some(ch) => ch,
        None => {
            *jitter = true;
            let bump = RIDGE_JITTER * a.diagonal().amax().max(1.0);
            for i in 0..a.nrows() {
                a[(i, i)] += bump;
            }
            Cholesky::new(a).ok_or(FitError::SingularSystem)?
        }
    };
    let theta = chol.solve(&rhs);
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(FitError::SingularSystem);
    }
    Ok(Solved { theta, chol, cwc })
}

struct IwlsState {
    theta: DVector<f64>,
    eta: DVector<f64>,
    deviance: f64,
    iterations: usize,
    trace: Vec<(f64, f64)>,
}

fn penalty_term(theta: &DVector<f64>, prec: &DVector<f64>, scale: f64) -> f64 {
    scale * theta.iter().zip(prec.iter()).map(|(t, q)| q * t * t).sum::<f64>()
}

fn mu_of(family: &Family, eta: &DVector<f64>) -> Option<DVector<f64>> {
    let mu = eta.map(|e| family.inverse_link(e));
    mu.iter().all(|&m| family.valid_mu(m)).then_some(mu)
}

/// IWLS at fixed variance parameters with step halving on the penalized
/// deviance.
fn iwls(
    family: &Family,
    p: &Problem,
    prec: &DVector<f64>,
    scale: f64,
    start_eta: &DVector<f64>,
    start_theta: Option<&DVector<f64>>,
    control: &FitControl,
    jitter: &mut bool,
) -> Result<IwlsState, FitError> {
    let mut eta = start_eta.clone();
    let mut theta = start_theta.cloned();
    let mut best = match &theta {
        Some(t) => {
            let mu = mu_of(family, &eta).ok_or(FitError::NonFiniteWeights(0))?;
            let dev = family.deviance(p.y.as_slice(), mu.as_slice(), p.prior.as_slice());
            dev + penalty_term(t, prec, scale)
        }
        None => f64::INFINITY,
    };
    let mut trace = vec![];
    let mut deviance = f64::NAN;
    for it in 1..=control.max_inner {
        let wm = working_model(family, p, &eta)?;
        let mut next = solve(p, &wm, prec, scale, jitter)?.theta;

        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let next_eta = &p.c * &next + &p.offset;
            if let Some(mu) = mu_of(family, &next_eta) {
                let dev = family.deviance(p.y.as_slice(), mu.as_slice(), p.prior.as_slice());
                let pen = dev + penalty_term(&next, prec, scale);
                if pen.is_finite() && pen <= best + 1e-10 * (best.abs() + 1.0) {
                    accepted = Some((next_eta, dev, pen));
                    break;
                }
            }
            match &theta {
                Some(old) => next = (&next + old) * 0.5,
                None => break,
            }
        }
        let (next_eta, dev, pen) = match accepted {
            Some(a) => a,
            // no improving step exists: the current iterate is the optimum
            None if theta.is_some() => break,
            None => return Err(FitError::NonFiniteWeights(0)),
        };

        let change = match &theta {
            Some(old) => (&next - old).norm() / (next.norm() + 1e-10),
            None => f64::INFINITY,
        };
        trace.push((dev, pen));
        theta = Some(next);
        eta = next_eta;
        deviance = dev;
        best = pen;
        if change < control.iwls_tol {
            return Ok(IwlsState { theta: theta.unwrap(), eta, deviance, iterations: it, trace });
        }
    }
    let theta = theta.ok_or(FitError::SingularSystem)?;
    Ok(IwlsState { theta, eta, deviance, iterations: control.max_inner, trace })
}

pub fn fit(design: &ModelDesign, family: &Family, control: &FitControl) -> Result<FitResult, FitError> {
    design.validate(family)?;
    let problem = Problem::assemble(design)?;
    let n = design.n_obs();
    let nb = design.blocks.len();

    let estimate_variances = control.fixed_variances.is_none() && nb > 0;
    let mut variances = match &control.fixed_variances {
        Some(v) => {
            if v.len() != nb || v.iter().any(|&s| !(s > 0.0)) {
                return Err(FitError::DimensionMismatch(format!(
                    "{} fixed variances given for {nb} blocks (all must be > 0)",
                    v.len()
                )));
            }
            v.clone()
        }
        None => vec![control.initial_variance; nb],
    };
    let mut scale = 1.0;

    let mean_y = design.response.mean();
    let mut eta = DVector::from_fn(n, |i, _| family.link(family.initial_mu(design.response[i], mean_y)));
    let mut theta: Option<DVector<f64>> = None;

    let mut jitter = false;
    let mut log = vec![];
    let mut inner_total = 0;
    let mut outer = 0;

    let stats = loop {
        outer += 1;
        let prec = problem.precision(&variances);
        let state = iwls(family, &problem, &prec, scale, &eta, theta.as_ref(), control, &mut jitter)?;
        inner_total += state.iterations;

        let wm = working_model(family, &problem, &state.eta)?;
        let solved = solve(&problem, &wm, &prec, scale, &mut jitter)?;
        // H⁻¹ = ψ (CᵀWC + ψG⁻¹)⁻¹
        let h_inv = solved.chol.inverse() * scale;
        let influence = &h_inv * &solved.cwc / scale;
        let edf = influence.trace();

        let coef_change = match &theta {
            Some(old) => (&state.theta - old).norm() / (state.theta.norm() + 1e-10),
            None => f64::INFINITY,
        };

        let mut change = coef_change;
        let mut next_scale = scale;
        if !family.has_fixed_scale() && (n as f64) > edf {
            next_scale = state.deviance / (n as f64 - edf);
            change = change.max(((next_scale - scale) / scale).abs());
        }
        let mut next_variances = variances.clone();
        if estimate_variances {
            let step = reml_step(&problem, &state.theta, &h_inv, &variances);
            for j in 0..nb {
                let tau = variances[j].ln();
                let new_tau = (tau + step[j]).clamp(-LOG_VARIANCE_BOUND, LOG_VARIANCE_BOUND);
                next_variances[j] = new_tau.exp();
                change = change.max((new_tau - tau).abs());
            }
        }

        log.push(format!(
            "iter={outer} deviance={} max_rel_change={:e} sigma2=[{}]",
            state.deviance,
            change,
            variances.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
        ));
        if jitter && !log.iter().any(|l| l.contains("ridge_jitter")) {
            log.push(format!("iter={outer} ridge_jitter={RIDGE_JITTER:e}"));
        }

        // nothing left to estimate once the coefficients are settled
        let nothing_outer = !estimate_variances && family.has_fixed_scale();
        let final_change = if nothing_outer { 0.0 } else { change };
        let done = nothing_outer
            || (coef_change < control.reml_tol.max(control.iwls_tol) && change < control.reml_tol);

        let trace = state.trace.clone();
        if done || outer >= control.max_outer {
            break (state, h_inv, influence, edf, trace, done, final_change);
        }
        eta = state.eta.clone();
        theta = Some(state.theta);
        scale = next_scale;
        variances = next_variances;
    };

    let (state, h_inv, influence, edf, trace, converged, final_change) = stats;
    let mu = state.eta.map(|e| family.inverse_link(e));
    let deviance = state.deviance;
    let ll_scale = match family.kind {
        FamilyKind::Poisson => 1.0,
        FamilyKind::Gaussian => deviance / n as f64,
        FamilyKind::Gamma => scale,
    };
    let loglik = family.log_likelihood(
        design.response.as_slice(),
        mu.as_slice(),
        problem.prior.as_slice(),
        ll_scale,
    );

    let se = h_inv.diagonal().map(|v| v.max(0.0).sqrt());
    let lookup = |col: Column| problem.columns.iter().position(|&c| c == col);
    let estimate = |name: &str, col: Column| match lookup(col) {
        Some(i) => CoefficientEstimate { name: name.to_string(), estimate: state.theta[i], std_error: se[i], aliased: false },
        None => CoefficientEstimate { name: name.to_string(), estimate: f64::NAN, std_error: f64::NAN, aliased: true },
    };
    let fixed = design.fixed_names.iter().enumerate().map(|(j, nm)| estimate(nm, Column::Fixed(j))).collect();
    let graph_stats =
        design.graph_stat_names.iter().enumerate().map(|(j, nm)| estimate(nm, Column::Graph(j))).collect();

    let blocks = design
        .blocks
        .iter()
        .enumerate()
        .map(|(b, blk)| {
            let r = &problem.reparams[b];
            let (qd, pd) = (r.null_dim(), r.penalized_dim());
            // θ_j ordered as (null, penalized) with T = [X⁽q⁾ | X⁽ᵖ⁾]
            let idx: Vec<Option<usize>> = (0..qd)
                .map(|k| lookup(Column::Null(b, k)))
                .chain((0..pd).map(|k| lookup(Column::Penalized(b, k))))
                .collect();
            let local = DVector::from_iterator(qd + pd, idx.iter().map(|i| i.map_or(0.0, |i| state.theta[i])));
            let cov = DMatrix::from_fn(qd + pd, qd + pd, |a, c| match (idx[a], idx[c]) {
                (Some(i), Some(j)) => h_inv[(i, j)],
                _ => 0.0,
            });
            let mut t = DMatrix::zeros(r.to_null.nrows(), qd + pd);
            t.columns_mut(0, qd).copy_from(&r.to_null);
            t.columns_mut(qd, pd).copy_from(&r.to_penalized);
            let edf_block: f64 = idx.iter().flatten().map(|&i| influence[(i, i)]).sum();
            BlockFit {
                name: blk.name.clone(),
                reparam: r.clone(),
                penalized: local.rows(qd, pd).into_owned(),
                penalized_se: DVector::from_fn(pd, |k, _| cov[(qd + k, qd + k)].max(0.0).sqrt()),
                null: local.rows(0, qd).into_owned(),
                null_se: DVector::from_fn(qd, |k, _| cov[(k, k)].max(0.0).sqrt()),
                coefficients: &t * &local,
                covariance: &t * cov * t.transpose(),
                variance: variances[b],
                edf: edf_block,
            }
        })
        .collect();

    Ok(FitResult {
        family: *family,
        fixed,
        graph_stats,
        blocks,
        scale,
        edf,
        deviance,
        loglik,
        n,
        response: design.response.clone(),
        prior_weights: problem.prior.clone(),
        linear_predictor: state.eta,
        fitted: mu,
        convergence: Convergence {
            converged,
            outer_iterations: outer,
            inner_iterations: inner_total,
            final_change,
            ridge_jitter: jitter,
            log,
            last_iwls_trace: trace,
        },
    })
}

/// Fisher-scoring step on log σ²_j for the REML criterion of the working
/// model.
///
/// With M_jk = δ_jk I/σ²_j − (H⁻¹)_jk/(σ²_j σ²_k), the score is
/// s_j = −½ tr(M_jj) + ½ |u_j|²/σ⁴_j and the expected information is
/// F_jk = ½ ‖M_jk‖²_F; both are rescaled to the log-variance parameters.
fn reml_step(p: &Problem, theta: &DVector<f64>, h_inv: &DMatrix<f64>, variances: &[f64]) -> Vec<f64> {
    let nb = variances.len();
    let mut score = DVector::zeros(nb);
    let mut info = DMatrix::zeros(nb, nb);
    let sd: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    for j in 0..nb {
        let rj = p.penalized[j].clone();
        let qj = rj.len() as f64;
        if rj.is_empty() {
            continue;
        }
        let tr_jj: f64 = rj.clone().map(|i| h_inv[(i, i)]).sum();
        let u2: f64 = rj.clone().map(|i| theta[i] * theta[i]).sum();
        score[j] = -0.5 * (qj - tr_jj / variances[j]) + 0.5 * u2 / variances[j];
        for k in 0..nb {
            let rk = p.penalized[k].clone();
            let mut fro = 0.0;
            for a in rj.clone() {
                for b in rk.clone() {
                    let ident = if j == k && a == b { 1.0 } else { 0.0 };
                    let m = ident - h_inv[(a, b)] / (sd[j] * sd[k]);
                    fro += m * m;
                }
            }
            info[(j, k)] = 0.5 * fro;
        }
    }
    for j in 0..nb {
        if p.penalized[j].is_empty() {
            info[(j, j)] = 1.0;
        }
        info[(j, j)] += 1e-12;
    }
    let step = match Cholesky::new(info.clone()) {
        Some(ch) => ch.solve(&score),
        None => DVector::from_fn(nb, |j, _| score[j] / info[(j, j)].max(1e-12)),
    };
    let largest = step.amax();
    let shrink = if largest > MAX_LOG_STEP { MAX_LOG_STEP / largest } else { 1.0 };
    step.iter()
        .zip(variances)
        .map(|(&s, &v)| {
            let s = s * shrink;
            let tau = v.ln();
            // pinned at a bound and still pushing outward: stop moving
            if (tau <= -LOG_VARIANCE_BOUND && s < 0.0) || (tau >= LOG_VARIANCE_BOUND && s > 0.0) {
                0.0
            } else {
                s
            }
        })
        .collect()
}
