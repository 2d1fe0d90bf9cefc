//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the search pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A gate sequence that violates its structural invariants.
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    /// Physically meaningless noise parameters (e.g. T2 > 2*T1).
    #[error("invalid physics: {0}")]
    InvalidPhysics(String),

    /// A probability or angle outside its admissible range.
    #[error("parameter out of range: {0}")]
    Parameter(String),

    /// Mismatched vector/matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Dataset ingestion or split construction failure.
    #[error("data error: {0}")]
    Data(String),

    /// Inconsistent search budgets or configuration.
    #[error("config error: {0}")]
    Config(String),

    /// Failure reading an input file.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
