use std::path::PathBuf;
use std::sync::Arc;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("cannot reverse {n} steps with {s} checkpoint slots")]
    InfeasibleSchedule { n: usize, s: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("payload is {actual} bytes, expected {expected}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("slot {slot} out of range for a pool of {capacity} slots")]
    SlotOutOfRange { slot: usize, capacity: usize },

    #[error("slot {0} was read before it was written")]
    EmptySlot(usize),

    #[error("no checkpoint stored for step {0}")]
    MissingKey(usize),

    #[error("checkpoint file {path} failed verification: {reason}")]
    ChecksumMismatch { path: PathBuf, reason: String },

    #[error("level-2 storage is full")]
    StorageFull,

    #[error("transfer worker disconnected")]
    WorkerGone,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("i/o error: {0}")]
    Io(Arc<std::io::Error>),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        // ENOSPC / EDQUOT
        if err.kind() == std::io::ErrorKind::StorageFull
            || err.kind() == std::io::ErrorKind::QuotaExceeded
        {
            Error::StorageFull
        } else {
            Error::Io(Arc::new(err))
        }
    }
}
