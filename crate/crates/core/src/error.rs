//! Error types shared across the workspace.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller handed us something malformed: wrong dimensions, parameters
    /// outside their domain, datasets too small for the requested clustering.
    #[error("invalid input: {0}")]
    Input(String),

    /// A cluster cannot support a Gaussian fit (too few rows, or zero
    /// variance along the constrained coordinate).
    #[error("degenerate cluster: {0}")]
    DegenerateCluster(String),

    /// Linear algebra broke down (singular covariance past regularization).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Every restart of the optimizer failed.
    #[error("optimization failed: {0}")]
    Optimization(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateCluster(msg.into())
    }
}
