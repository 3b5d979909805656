use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] lastiter_core::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("oracle precondition violated: {0}")]
    Oracle(String),
    #[error("grid truncation mass {mass:e} exceeds {tolerance:e}; widen the support")]
    Truncation { mass: f64, tolerance: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
