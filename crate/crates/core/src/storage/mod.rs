//! Level-1 slot pool and Level-2 backends.
//!
//! Level-2 backends are a blocking [`Device`] (files on disk, or an
//! in-memory store that sleeps to emulate a slow link) wrapped in a
//! [`TransferEngine`], which owns one background worker and hands out
//! [`TransferTicket`]s.

mod backend;
mod file;
pub mod format;
mod pool;
mod sim;

use bytes::Bytes;

use crate::error::{Error, Result};
use crate::schedule::StepIndex;

pub use backend::{Device, Level2Backend, Transfer, TransferEngine, TransferKind, TransferTicket};
pub use file::{file_backend, FileDevice};
pub use pool::Level1Pool;
pub use sim::{simulated_backend, SimulatedDevice};

/// Serialized image of one program state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointPayload {
    pub step: StepIndex,
    pub bytes: Bytes,
}

impl CheckpointPayload {
    pub fn new(step: StepIndex, bytes: impl Into<Bytes>) -> Self {
        CheckpointPayload { step, bytes: bytes.into() }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn expect_len(&self, expected: usize) -> Result<()> {
        if self.len() != expected {
            return Err(Error::SizeMismatch { expected, actual: self.len() });
        }
        Ok(())
    }
}

/// Concatenates little-endian `f64`s.
pub fn encode_f64s(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_f64s(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::SizeMismatch { expected: bytes.len() / 8 * 8, actual: bytes.len() });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_layout_is_little_endian() {
        let bytes = encode_f64s(&[1.0, -0.0]);
        assert_eq!(&bytes[..8], &1.0f64.to_le_bytes());
        let back = decode_f64s(&bytes).unwrap();
        assert_eq!(back[0], 1.0);
        assert!(back[1].is_sign_negative());
        assert!(decode_f64s(&bytes[..7]).is_err());
    }
}
