//! Binary tensor files (`.eer`).
//!
//! Layout, all little-endian: magic `EERB`, u32 format version (1), u32
//! channels, u32 time-samples, u32 reserved (0), then `channels * time`
//! f32 values, channel-major.

use std::io::{self, Read, Write};

pub const MAGIC: [u8; 4] = *b"EERB";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorHeader {
    pub channels: u32,
    pub times: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("reserved header field is {0}, expected 0")]
    Reserved(u32),
    #[error("payload has {actual} bytes, header implies {expected}")]
    Truncated { expected: usize, actual: usize },
    #[error("file shorter than the {HEADER_LEN}-byte header ({0} bytes)")]
    ShortHeader(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn encode(channels: usize, times: usize, values: &[f32]) -> Vec<u8> {
    debug_assert_eq!(values.len(), channels * times);
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(channels as u32).to_le_bytes());
    out.extend_from_slice(&(times as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_tensor<W: Write>(mut w: W, channels: usize, times: usize, values: &[f32]) -> io::Result<()> {
    w.write_all(&encode(channels, times, values))
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

pub fn decode_header(bytes: &[u8]) -> Result<TensorHeader, FormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::ShortHeader(bytes.len()));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(FormatError::BadVersion(version));
    }
    let reserved = u32_at(bytes, 16);
    if reserved != 0 {
        return Err(FormatError::Reserved(reserved));
    }
    Ok(TensorHeader { channels: u32_at(bytes, 8), times: u32_at(bytes, 12) })
}

pub fn decode(bytes: &[u8]) -> Result<(TensorHeader, Vec<f32>), FormatError> {
    let header = decode_header(bytes)?;
    let n = header.channels as usize * header.times as usize;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != n * 4 {
        return Err(FormatError::Truncated { expected: n * 4, actual: payload.len() });
    }
    let values = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, values))
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<(TensorHeader, Vec<f32>), FormatError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}
