use thiserror::Error;

/// Errors produced anywhere in the classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("CMA diverged at iteration {iteration} (tap norm {norm:e})")]
    Diverged { iteration: usize, norm: f64 },
    #[error("singular matrix (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("table cache error: {0}")]
    Cache(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
