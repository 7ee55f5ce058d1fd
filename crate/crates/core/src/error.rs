use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability {0}: must lie in [0, 1]")]
    Probability(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("homology order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
