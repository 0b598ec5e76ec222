//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Structurally invalid input (wrong lengths, non-positive quantities,
    /// arguments outside a transform's domain).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Parameters that parse but fail the model diagnostics (stationarity,
    /// kernel positivity, martingale constraints).
    #[error("validation failed: {0}")]
    Validation(String),

    /// A numerical routine diverged or failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
