use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] spukf_scenarios::Error),

    #[error(transparent)]
    Filter(#[from] spukf_core::Error),

    #[error("invalid campaign configuration: {0}")]
    Config(String),

    #[error("timing report needs a UKF baseline")]
    MissingBaseline,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
