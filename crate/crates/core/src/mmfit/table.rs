use statrs::function::erf::erfc;

use super::FitResult;

pub const COEFFICIENT_HEADER: [&str; 5] = ["name", "Estimate", "Std. Error", "t value", "Pr(>|t|)"];

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    /// Two-sided, from the standard normal approximation.
    pub p_value: f64,
}

/// Fixed effects followed by graph-statistic effects. Aliased columns carry
/// NaN throughout.
pub fn coefficient_table(fit: &FitResult) -> Vec<CoefficientRow> {
    fit.fixed
        .iter()
        .chain(&fit.graph_stats)
        .map(|c| {
            let t = c.estimate / c.std_error;
            CoefficientRow {
                name: c.name.clone(),
                estimate: c.estimate,
                std_error: c.std_error,
                t_value: t,
                p_value: erfc(t.abs() / std::f64::consts::SQRT_2),
            }
        })
        .collect()
}
