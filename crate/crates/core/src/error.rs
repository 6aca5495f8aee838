use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("instance is not complete: {0}")]
    NotComplete(String),

    #[error("matching is not perfect: {0}")]
    NotPerfect(String),

    #[error("invalid random matching: {0}")]
    InvalidMatrix(String),

    #[error("matrix is not sub-stochastic: {0}")]
    NotSubStochastic(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("enumeration cap of {cap} matchings exceeded")]
    CapExceeded { cap: usize },

    #[error("invalid X3C instance: {0}")]
    InvalidX3C(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable tag, used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInstance(_) => "invalid-instance",
            Error::NotComplete(_) => "not-complete",
            Error::NotPerfect(_) => "not-perfect",
            Error::InvalidMatrix(_) => "invalid-matrix",
            Error::NotSubStochastic(_) => "not-sub-stochastic",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::InvalidX3C(_) => "invalid-x3c",
            Error::Parse(_) => "parse",
        }
    }
}
