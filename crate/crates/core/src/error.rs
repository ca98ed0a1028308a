use thiserror::Error;

/// Errors produced by configuration validation, estimation, and metrics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("estimation failure: {reason} (condition number {condition:.3e})")]
    Estimation { reason: String, condition: f64 },

    #[error("angle decode out of domain: {0}")]
    AngleDomain(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("undefined metric: {0}")]
    Metric(String),

    #[error("linear algebra backend error: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
