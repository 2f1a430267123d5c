use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Filter(#[from] spukf_core::Error),

    #[error("invalid scenario configuration: {0}")]
    Config(String),

    #[error("position vector has zero length")]
    ZeroRadius,

    #[error("least-squares geometry is singular (condition number {condition:e})")]
    SingularGeometry { condition: f64 },

    #[error("least-squares fix did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("{needed} pseudoranges needed, {found} available")]
    TooFewSatellites { needed: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
