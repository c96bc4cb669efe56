use thiserror::Error;

/// Errors produced by the fitting and diagnostic pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value in the residual recursion at t = {t}")]
    NumericOverflow { t: usize },

    #[error("parameter is outside the stability/invertibility region (min AR root modulus {min_root_ar:.6}, min MA root modulus {min_root_ma:.6})")]
    Unstable { min_root_ar: f64, min_root_ma: f64 },

    #[error("residual component {component} has zero variance")]
    DegenerateResidual { component: usize },

    #[error("residual covariance matrix is singular")]
    SingularCovariance,

    #[error("information matrix J is ill-conditioned (condition number {condition:.3e})")]
    IllConditionedJ { condition: f64 },

    #[error(
        "self-normalization matrix is singular (condition number {condition:.3e}); \
         it is non-singular almost surely only when the noise has a positive density \
         around zero, so degenerate or discrete noises can trigger this"
    )]
    SingularNormalizer { condition: f64 },

    #[error("no admissible starting point for the optimizer: {0}")]
    Initialization(String),

    #[error("quantile table has no entry for K = {0}")]
    MissingK(usize),

    #[error("quantile table format: {0}")]
    TableFormat(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
