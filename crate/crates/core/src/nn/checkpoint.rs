//! Named-tensor checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  "AADCKPT\0"
//! version u32      1
//! count   u32      number of tensors
//! count × { name_len u32, name utf-8, ndim u32, dims u32 × ndim }
//! payloads         f32 little-endian, tensors in header order
//! ```

use std::path::Path;

use super::module::{Module, Slot};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"AADCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub type NamedTensors = Vec<(String, Tensor<f32>)>;

pub fn encode_checkpoint(tensors: &[(String, Tensor<f32>)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for (_, t) in tensors {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Option<&[u8]> {
        let s = self.buf.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8], origin: &Path) -> Result<NamedTensors> {
    let fail = |reason: &str| Error::Format {
        path: origin.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8) != Some(&CHECKPOINT_MAGIC[..]) {
        return Err(fail("bad checkpoint magic"));
    }
    let version = r.u32().ok_or_else(|| fail("truncated header"))?;
    if version != CHECKPOINT_VERSION {
        return Err(fail(&format!("unsupported checkpoint version {version}")));
    }
    let count = r.u32().ok_or_else(|| fail("truncated header"))? as usize;
    let mut header = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32().ok_or_else(|| fail("truncated header"))? as usize;
        let name = r.take(len).ok_or_else(|| fail("truncated tensor name"))?;
        let name = String::from_utf8(name.to_vec()).map_err(|_| fail("tensor name is not utf-8"))?;
        let ndim = r.u32().ok_or_else(|| fail("truncated header"))? as usize;
        let dims = (0..ndim)
            .map(|_| r.u32().map(|d| d as usize))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| fail("truncated dims"))?;
        header.push((name, dims));
    }
    let mut out = Vec::with_capacity(count);
    for (name, dims) in header {
        let n: usize = dims.iter().product();
        let raw = r
            .take(n * 4)
            .ok_or_else(|| fail(&format!("truncated payload for {name}")))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let t = Tensor::new(dims, data).map_err(|e| fail(&format!("{name}: {e}")))?;
        out.push((name, t));
    }
    if r.pos != bytes.len() {
        return Err(fail("trailing bytes after payload"));
    }
    Ok(out)
}

pub fn save_checkpoint(path: &Path, tensors: &[(String, Tensor<f32>)]) -> Result<()> {
    std::fs::write(path, encode_checkpoint(tensors)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<NamedTensors> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}

/// All parameters and buffers of a module, converted to `f32`.
pub fn state_dict<T: Real, M: Module<T> + ?Sized>(model: &mut M) -> NamedTensors {
    let mut out = Vec::new();
    model.visit("", &mut |name, slot| {
        let t = match slot {
            Slot::Param(p) => p.value.cast::<f32>(),
            Slot::Buffer(b) => b.cast::<f32>(),
        };
        out.push((name.to_string(), t));
    });
    out
}

/// Overwrites module state from named tensors; names and shapes must match exactly.
pub fn load_state_dict<T: Real, M: Module<T> + ?Sized>(model: &mut M, tensors: &[(String, Tensor<f32>)]) -> Result<()> {
    let mut i = 0;
    let mut err = None;
    model.visit("", &mut |name, slot| {
        if err.is_some() {
            return;
        }
        let Some((tn, t)) = tensors.get(i) else {
            err = Some(Error::InvalidArgument(format!("checkpoint is missing {name}")));
            return;
        };
        i += 1;
        if tn != name {
            err = Some(Error::InvalidArgument(format!(
                "checkpoint has {tn} where {name} was expected"
            )));
            return;
        }
        let dst = match slot {
            Slot::Param(p) => &mut p.value,
            Slot::Buffer(b) => b,
        };
        if dst.shape() != t.shape() {
            err = Some(Error::shape("load_state_dict", dst.shape(), t.shape()));
            return;
        }
        *dst = t.cast::<T>();
    });
    if let Some(e) = err {
        return Err(e);
    }
    if i != tensors.len() {
        return Err(Error::InvalidArgument(format!(
            "checkpoint has {} tensors, model expects {i}",
            tensors.len()
        )));
    }
    Ok(())
}
