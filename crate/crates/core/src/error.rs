//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by matrix primitives, map constructors and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid quantum operation: {0}")]
    InvalidOperation(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("map is not an extension of the given operation: {0}")]
    NotAnExtension(String),

    #[error("conditional output state undefined: detection probability {prob} below threshold")]
    UndefinedConditionalState { prob: f64 },

    #[error("operation requires Kraus rank 1, got rank {0}")]
    UnsupportedKrausRank(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
