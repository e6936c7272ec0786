//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by data handling, filtering, estimation and reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("non-stationary parameters: persistence {persistence:.6} >= 1")]
    NonStationary { persistence: f64 },

    #[error("non-positive conditional variance at t = {t}")]
    NonPositiveVariance { t: usize },

    #[error("non-finite {what} at t = {t}")]
    NonFinite { what: String, t: usize },

    #[error("quadrature failed to converge: estimated error {error:.3e}")]
    Quadrature { error: f64 },

    #[error("singular matrix (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("too many failed fits: {failures} of {replications}")]
    TooManyFailures { failures: usize, replications: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid_param(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
