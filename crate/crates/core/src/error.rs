use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The requested computation is not supported for this measure.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A numerical routine failed to reach its tolerance or lost precision.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A sampling loop exceeded its draw cap.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Malformed configuration or event.
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
pub(crate) use domain;
