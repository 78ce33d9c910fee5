//! Estimation engine for exponential-family regression with penalized
//! blocks: mixed-model reparametrization, penalized IWLS, REML variance
//! estimation, fit criteria and coefficient tables.

mod criteria;
mod family;
mod fit;
mod reparam;
mod table;

pub use criteria::{criteria, Criteria};
pub use family::{Family, FamilyKind, Link};
pub use fit::{
    fit, BlockFit, CoefficientEstimate, Convergence, FitControl, FitResult, ModelDesign, PenalizedBlock,
};
pub use reparam::{reparametrize, ReparamBlock};
pub use table::{coefficient_table, CoefficientRow, COEFFICIENT_HEADER};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("non-finite working weight at observation {0} (separation or overflow)")]
    NonFiniteWeights(usize),
    #[error("penalized normal equations are singular")]
    SingularSystem,
    #[error("malformed penalty: {0}")]
    MalformedPenalty(String),
    #[error("design has no observations or no columns")]
    EmptyDesign,
    #[error("effective degrees of freedom {edf} reach the observation count {n}")]
    EdfExceedsN { edf: f64, n: usize },
}
