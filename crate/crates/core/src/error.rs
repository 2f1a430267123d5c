use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive semi-definite: pivot {pivot} = {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    Asymmetric { row: usize, col: usize },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("integration produced a non-finite derivative at t = {time}")]
    IntegrationFailure { time: f64 },

    #[error("non-finite function value while perturbing component {component}")]
    NonFiniteEvaluation { component: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("approximation is exact at every scale; no slope can be fitted")]
    ExactRegime,

    #[error("no positive root found for j = {j}, h = {h}")]
    NoPositiveRoot { j: u32, h: u32 },
}
