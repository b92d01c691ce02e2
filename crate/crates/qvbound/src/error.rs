use thiserror::Error;

/// Crate-wide error type.
///
/// `Domain` is reserved for mathematically out-of-range requests (e.g. a
/// Gaussian-limit bound outside the Breuer-Major regime); the CLI maps it to
/// exit code 3. Everything else is an ordinary argument/capacity failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("domain: {0}")]
    Domain(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
