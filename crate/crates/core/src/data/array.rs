//! Single-array binary file.
//!
//! ```text
//! magic   4 bytes "AADA"
//! version u16     1
//! dtype   u8      1 = f32
//! ndim    u8
//! dims    u64 × ndim
//! payload f32 little-endian, row-major
//! ```

use std::path::Path;

use crate::error::{Error, Result};

pub const ARRAY_MAGIC: &[u8; 4] = b"AADA";
pub const ARRAY_VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 1;

pub fn encode_array(dims: &[usize], data: &[f32]) -> Vec<u8> {
    debug_assert_eq!(dims.iter().product::<usize>(), data.len());
    let mut out = Vec::with_capacity(8 + 8 * dims.len() + 4 * data.len());
    out.extend_from_slice(ARRAY_MAGIC);
    out.extend_from_slice(&ARRAY_VERSION.to_le_bytes());
    out.push(DTYPE_F32);
    out.push(dims.len() as u8);
    for &d in dims {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_array(bytes: &[u8], origin: &Path) -> Result<(Vec<usize>, Vec<f32>)> {
    let fail = |reason: String| Error::Format {
        path: origin.to_path_buf(),
        reason,
    };
    if bytes.len() < 8 || &bytes[..4] != ARRAY_MAGIC {
        return Err(fail("bad array magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != ARRAY_VERSION {
        return Err(fail(format!("unsupported array version {version}")));
    }
    if bytes[6] != DTYPE_F32 {
        return Err(fail(format!("unsupported dtype code {}", bytes[6])));
    }
    let ndim = bytes[7] as usize;
    let header = 8 + 8 * ndim;
    if bytes.len() < header {
        return Err(fail("truncated header".into()));
    }
    let dims: Vec<usize> = bytes[8..header]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let count = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let payload = &bytes[header..];
    match count {
        Some(n) if n.checked_mul(4) == Some(payload.len()) => {}
        _ => {
            return Err(fail(format!(
                "dims {dims:?} disagree with a payload of {} bytes",
                payload.len()
            )))
        }
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dims, data))
}

pub fn write_array(path: &Path, dims: &[usize], data: &[f32]) -> Result<()> {
    std::fs::write(path, encode_array(dims, data)).map_err(|e| Error::io(path, e))
}

pub fn read_array(path: &Path) -> Result<(Vec<usize>, Vec<f32>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_array(&bytes, path)
}
