//! Tensor container.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! offset 0   magic   b"LTNS"
//! offset 4   version u32 (= 1)
//! offset 8   N       u32  tokens
//! offset 12  C       u32  channels
//! offset 16  N*C f32 values, row-major by token
//! ```
//!
//! A text variant is accepted on read: first line `N C`, then N*C
//! whitespace-separated values.

use std::io::Write;
use std::path::Path;

use super::LatentTensor;
use crate::atomic;
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: [u8; 4] = *b"LTNS";
pub const TENSOR_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

fn malformed(reason: impl Into<String>) -> Error {
    Error::Format {
        what: "tensor file",
        reason: reason.into(),
    }
}

pub fn encode_tensor<W: Write>(t: &LatentTensor, mut out: W) -> std::io::Result<()> {
    let dim = |v: usize| u32::try_from(v).expect("tensor dimension exceeds u32");
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * t.values().len());
    buf.extend_from_slice(&TENSOR_MAGIC);
    buf.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    buf.extend_from_slice(&dim(t.n_tokens()).to_le_bytes());
    buf.extend_from_slice(&dim(t.n_channels()).to_le_bytes());
    for v in t.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)
}

/// Parses either the binary container or the text variant.
pub fn decode_tensor(bytes: &[u8]) -> Result<LatentTensor> {
    if bytes.starts_with(&TENSOR_MAGIC) {
        decode_binary(bytes)
    } else {
        let text = std::str::from_utf8(bytes).map_err(|_| malformed("neither binary LTNS nor UTF-8 text"))?;
        decode_text(text)
    }
}

fn decode_binary(bytes: &[u8]) -> Result<LatentTensor> {
    if bytes.len() < HEADER_LEN {
        return Err(malformed(format!("header truncated at {} bytes", bytes.len())));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != TENSOR_VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let (n, c) = (word(8) as usize, word(12) as usize);
    let body = &bytes[HEADER_LEN..];
    let expected = n
        .checked_mul(c)
        .and_then(|e| e.checked_mul(4))
        .ok_or_else(|| malformed("dimensions overflow"))?;
    if body.len() != expected {
        return Err(malformed(format!(
            "{n}x{c} tensor needs {expected} payload bytes, found {}",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    LatentTensor::new(n, c, values)
}

fn decode_text(text: &str) -> Result<LatentTensor> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| malformed("empty text tensor"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| malformed(format!("bad header `{header}`: {e}")))?;
    let [n, c] = dims[..] else {
        return Err(malformed(format!("header `{header}` must be `N C`")));
    };
    let values: Vec<f32> = lines
        .flat_map(str::split_whitespace)
        .map(|tok| tok.parse().map_err(|_| malformed(format!("bad value `{tok}`"))))
        .collect::<Result<_>>()?;
    LatentTensor::new(n, c, values)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<LatentTensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes)
}

/// Writes the binary container atomically.
pub fn write_tensor(path: impl AsRef<Path>, t: &LatentTensor) -> Result<()> {
    atomic::write_file(path.as_ref(), |w| encode_tensor(t, w))
}
