use super::{FitError, FitResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criteria {
    pub aic: f64,
    pub bic: f64,
    pub gcv: f64,
    pub edf: f64,
    pub loglik: f64,
}

/// AIC = −2ℓ + 2·edf, BIC = −2ℓ + log(n)·edf, GCV = n·D/(n − edf)².
pub fn criteria(fit: &FitResult) -> Result<Criteria, FitError> {
    let n = fit.n as f64;
    if fit.edf >= n * (1.0 - 1e-10) {
        return Err(FitError::EdfExceedsN { edf: fit.edf, n: fit.n });
    }
    let ll = fit.loglik;
    Ok(Criteria {
        aic: -2.0 * ll + 2.0 * fit.edf,
        bic: -2.0 * ll + n.ln() * fit.edf,
        gcv: n * fit.deviance / (n - fit.edf).powi(2),
        edf: fit.edf,
        loglik: ll,
    })
}
