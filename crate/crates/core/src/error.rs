//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: ||A - A'|| = {deviation:.3e} exceeds {tol:.3e}")]
    NonHermitianInput { deviation: f64, tol: f64 },

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("degenerate QR input: |R[{index},{index}]| below underflow threshold")]
    DegenerateInput { index: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("alpha = {0} outside the valid range [2, 5]")]
    AlphaOutOfRange(f64),

    #[error("rejection sampling budget exhausted after {attempts} attempts")]
    RejectionBudgetExceeded { attempts: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checksum mismatch in {path}: stored {stored:016x}, computed {computed:016x}")]
    ChecksumMismatch {
        path: String,
        stored: u64,
        computed: u64,
    },

    #[error("format error in {path}: {reason}")]
    FormatError { path: String, reason: String },

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("refusing to overwrite existing path {0}")]
    PathExists(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
