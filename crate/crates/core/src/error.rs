use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive semi-definite: eigenvalue {eigenvalue:e} below tolerance -{tolerance:e}")]
    NotPositiveSemidefinite { eigenvalue: f64, tolerance: f64 },

    #[error("matrix is numerically singular: {0}")]
    Singular(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure at M={m}, K={k}, trial {trial}: {reason}")]
    Numerical {
        m: usize,
        k: usize,
        trial: u64,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
