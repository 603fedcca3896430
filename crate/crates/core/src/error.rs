use thiserror::Error;

/// Errors raised while building or applying the multilevel solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular interior block {block} on level {level}")]
    SingularBlock { level: usize, block: usize },

    #[error("singular dense matrix (zero pivot in column {column})")]
    SingularMatrix { column: usize },

    #[error("zero pivot in incomplete factorization at row {row}")]
    ZeroPivot { row: usize },

    #[error("matrix is not symmetric positive definite (failed at pivot {index})")]
    NotSpd { index: usize },

    #[error("invalid polynomial parameters: {0}")]
    InvalidPolynomial(String),

    #[error("non-positive curvature {tau:e} in nonlinear cycle on level {level}")]
    NonPositiveCurvature { level: usize, tau: f64 },

    #[error("coefficient pattern `{pattern}` is not defined in dimension {dim}")]
    PatternDimension { pattern: String, dim: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
