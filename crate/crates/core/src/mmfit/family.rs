use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use super::FitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Poisson,
    Gaussian,
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Log,
    Identity,
}

/// Exponential-family response distribution with its link.
///
/// Densities have the form exp((yθ − b(θ))/a(ψ) + c(y, ψ)) with a(ψ) = ψ/w for
/// prior weight w. The scale ψ is fixed at 1 for the Poisson family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Family {
    pub kind: FamilyKind,
    pub link: Link,
}

impl Family {
    pub fn poisson() -> Self {
        Family { kind: FamilyKind::Poisson, link: Link::Log }
    }

    pub fn gaussian() -> Self {
        Family { kind: FamilyKind::Gaussian, link: Link::Identity }
    }

    pub fn gamma() -> Self {
        Family { kind: FamilyKind::Gamma, link: Link::Log }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Poisson => "poisson",
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Gamma => "gamma",
        }
    }

    /// Link g(μ).
    pub fn link(&self, mu: f64) -> f64 {
        match self.link {
            Link::Log => mu.ln(),
            Link::Identity => mu,
        }
    }

    /// Response function h(η) = g⁻¹(η).
    pub fn inverse_link(&self, eta: f64) -> f64 {
        match self.link {
            Link::Log => eta.exp(),
            Link::Identity => eta,
        }
    }

    /// dμ/dη at η.
    pub fn mu_eta(&self, eta: f64) -> f64 {
        match self.link {
            Link::Log => eta.exp(),
            Link::Identity => 1.0,
        }
    }

    pub fn variance(&self, mu: f64) -> f64 {
        match self.kind {
            FamilyKind::Poisson => mu,
            FamilyKind::Gaussian => 1.0,
            FamilyKind::Gamma => mu * mu,
        }
    }

    /// Canonical parameter θ(μ).
    pub fn canonical(&self, mu: f64) -> f64 {
        match self.kind {
            FamilyKind::Poisson => mu.ln(),
            FamilyKind::Gaussian => mu,
            FamilyKind::Gamma => -1.0 / mu,
        }
    }

    /// Cumulant function b(θ).
    pub fn cumulant(&self, theta: f64) -> f64 {
        match self.kind {
            FamilyKind::Poisson => theta.exp(),
            FamilyKind::Gaussian => 0.5 * theta * theta,
            FamilyKind::Gamma => -(-theta).ln(),
        }
    }

    pub fn valid_mu(&self, mu: f64) -> bool {
        match self.kind {
            FamilyKind::Gaussian => mu.is_finite(),
            FamilyKind::Poisson | FamilyKind::Gamma => mu.is_finite() && mu > 0.0,
        }
    }

    pub fn has_fixed_scale(&self) -> bool {
        self.kind == FamilyKind::Poisson
    }

    pub fn validate_response(&self, y: &[f64]) -> Result<(), FitError> {
        for (i, &v) in y.iter().enumerate() {
            let ok = match self.kind {
                FamilyKind::Poisson => v.is_finite() && v >= 0.0,
                FamilyKind::Gaussian => v.is_finite(),
                FamilyKind::Gamma => v.is_finite() && v > 0.0,
            };
            if !ok {
                return Err(FitError::InvalidResponse(format!(
                    "observation {i} = {v} is not valid for the {} family",
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// Starting mean for IWLS.
    pub fn initial_mu(&self, y: f64, mean_y: f64) -> f64 {
        match self.kind {
            FamilyKind::Poisson => (y + mean_y) / 2.0 + 0.1,
            FamilyKind::Gaussian => y,
            FamilyKind::Gamma => y,
        }
    }

    /// Unit deviance d(y, μ); the deviance is Σ w·d.
    pub fn unit_deviance(&self, y: f64, mu: f64) -> f64 {
        match self.kind {
            FamilyKind::Poisson => {
                let ylogy = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
                2.0 * (ylogy - (y - mu))
            }
            FamilyKind::Gaussian => (y - mu).powi(2),
            FamilyKind::Gamma => 2.0 * (-(y / mu).ln() + (y - mu) / mu),
        }
    }

    pub fn deviance(&self, y: &[f64], mu: &[f64], weights: &[f64]) -> f64 {
        y.iter().zip(mu).zip(weights).map(|((&y, &m), &w)| w * self.unit_deviance(y, m)).sum()
    }

    /// Log-likelihood Σ log f(y | μ, ψ). The gaussian family uses `scale` as
    /// the error variance, the gamma family as the dispersion 1/shape.
    pub fn log_likelihood(&self, y: &[f64], mu: &[f64], weights: &[f64], scale: f64) -> f64 {
        let terms = y.iter().zip(mu).zip(weights);
        match self.kind {
            FamilyKind::Poisson => terms
                .map(|((&y, &m), &w)| {
                    let ylogm = if y > 0.0 { y * m.ln() } else { 0.0 };
                    w * (ylogm - m - ln_gamma(y + 1.0))
                })
                .sum(),
            FamilyKind::Gaussian => terms
                .map(|((&y, &m), &w)| {
                    -0.5 * ((2.0 * std::f64::consts::PI * scale / w).ln() + w * (y - m).powi(2) / scale)
                })
                .sum(),
            FamilyKind::Gamma => terms
                .map(|((&y, &m), &w)| {
                    let shape = w / scale;
                    shape * (shape * y / m).ln() - shape * y / m - y.ln() - ln_gamma(shape)
                })
                .sum(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "poisson" => Ok(Family::poisson()),
            "gaussian" => Ok(Family::gaussian()),
            "gamma" => Ok(Family::gamma()),
            other => Err(format!("unknown family '{other}' (expected poisson, gaussian or gamma)")),
        }
    }
}
