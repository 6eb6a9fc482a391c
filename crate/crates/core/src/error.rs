use thiserror::Error;

/// Errors produced by the kernels, tensor-train operations and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("matrix is not positive definite even with shift {shift:e}")]
    IndefiniteGram { shift: f64 },

    #[error("dense oracle refused: {entries} entries exceeds the limit of {limit}")]
    OracleTooLarge { entries: u128, limit: u128 },

    #[error("Krylov breakdown: {0}")]
    Breakdown(String),

    #[error("preconditioner is degenerate: {0}")]
    DegeneratePreconditioner(String),

    #[error("invalid serialized data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}

pub(crate) fn violation(msg: impl Into<String>) -> Error {
    Error::ContractViolation(msg.into())
}
