use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("out of range: {0}")]
    OutOfRange(String),
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("operation budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::error::Error::InvalidArgument(format!($($arg)*)) };
}
macro_rules! out_of_range {
    ($($arg:tt)*) => { $crate::error::Error::OutOfRange(format!($($arg)*)) };
}
pub(crate) use invalid;
pub(crate) use out_of_range;
