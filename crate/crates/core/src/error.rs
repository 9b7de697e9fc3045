use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "quadrature did not converge within {panels} panels (estimate {estimate}, error {error})"
    )]
    NonConvergent {
        panels: usize,
        estimate: f64,
        error: f64,
    },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("update with zero validity ({0:e})")]
    ZeroValidity(f64),
    #[error("observation `{0}` has zero mass")]
    ZeroMassObservation(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::CarrierMismatch(msg.into())
    }
}
