use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed input: wrong lengths, negative weights, non-finite numbers.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Input is well formed but outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The quantity is only defined for a different range of the tail order.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),
    /// A solver or quadrature failed to converge, or produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
