//! On-disk checkpoint layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "CKPT"
//!      4     2  format version (1)
//!      6     8  step index
//!     14     8  payload length
//!     22     n  payload
//!   22+n     4  CRC32C of bytes [0, 22+n)
//! ```

use super::CheckpointPayload;
use crate::schedule::StepIndex;

pub const MAGIC: &[u8; 4] = b"CKPT";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 22;
pub const TRAILER_LEN: usize = 4;

/// File size for a payload of `payload_len` bytes.
pub fn encoded_len(payload_len: usize) -> usize {
    HEADER_LEN + payload_len + TRAILER_LEN
}

pub fn encode(payload: &CheckpointPayload) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(payload.len()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(payload.step.0 as u64).to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload.bytes);
    let crc = crc32c::crc32c(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Parses a checkpoint image. The error string says which check failed.
pub fn decode(data: &[u8]) -> Result<CheckpointPayload, String> {
    if data.len() < HEADER_LEN + TRAILER_LEN {
        return Err(format!("{} bytes is shorter than the header", data.len()));
    }
    if &data[..4] != MAGIC {
        return Err("bad magic".into());
    }
    let version = u16::from_le_bytes([data[4], data[5]]);
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let step = u64::from_le_bytes(data[6..14].try_into().unwrap());
    let len = u64::from_le_bytes(data[14..22].try_into().unwrap());
    let expected = (len as usize).checked_add(HEADER_LEN + TRAILER_LEN);
    if expected != Some(data.len()) {
        return Err(format!("length field {len} disagrees with file size {}", data.len()));
    }
    let body_end = data.len() - TRAILER_LEN;
    let stored = u32::from_le_bytes(data[body_end..].try_into().unwrap());
    let actual = crc32c::crc32c(&data[..body_end]);
    if stored != actual {
        return Err(format!("crc32c {actual:#010x} != stored {stored:#010x}"));
    }
    Ok(CheckpointPayload::new(StepIndex(step as usize), data[HEADER_LEN..body_end].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_fixed() {
        let payload = CheckpointPayload::new(StepIndex(5), vec![0u8; 3]);
        let bytes = encode(&payload);
        assert_eq!(bytes.len(), encoded_len(3));
        assert_eq!(&bytes[..4], b"CKPT");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..14], &[5, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[14..22], &[3, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(decode(&bytes).unwrap(), payload);
    }

    #[test]
    fn crc32c_check_value() {
        // standard Castagnoli check value
        assert_eq!(crc32c::crc32c(b"123456789"), 0xe306_9283);
    }

    #[test]
    fn corruption_is_detected() {
        let payload = CheckpointPayload::new(StepIndex(9), (0..64u8).collect::<Vec<_>>());
        let bytes = encode(&payload);
        for cut in [0, 10, HEADER_LEN, bytes.len() - 1] {
            assert!(decode(&bytes[..cut]).is_err(), "truncated at {cut}");
        }
        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 7] ^= 0x10;
        assert!(decode(&flipped).unwrap_err().contains("crc32c"));
        let mut bad_version = bytes;
        bad_version[4] = 2;
        assert!(decode(&bad_version).unwrap_err().contains("version"));
    }
}
