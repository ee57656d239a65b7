//! PUMAW1 weight files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   "PUMAW1\0\0"
//! u32     tensor count
//! per tensor:
//!   u16   name length, then that many UTF-8 bytes
//!   u8    dtype (0 = float32)
//!   u8    rank, then rank x u32 dims
//!   f32   data, product(dims) values
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;
use trinfer_core::transformer::{FloatTensor, ModelWeights};

pub const MAGIC: &[u8; 8] = b"PUMAW1\0\0";
pub const DTYPE_F32: u8 = 0;

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("malformed weight file at byte offset {offset}: {msg}")]
    Format { offset: usize, msg: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn bad(offset: usize, msg: impl Into<String>) -> WeightsError {
    WeightsError::Format {
        offset,
        msg: msg.into(),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WeightsError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(bad(
                self.pos,
                format!("truncated {what}: need {n} bytes, {} left", self.buf.len() - self.pos),
            )),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8, WeightsError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, WeightsError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, WeightsError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode(buf: &[u8]) -> Result<ModelWeights, WeightsError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(bad(0, "bad magic, expected PUMAW1"));
    }
    let count = r.u32("tensor count")?;
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        let at = r.pos;
        let len = r.u16("name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| bad(at + 2, "tensor name is not UTF-8"))?
            .to_string();
        let dtype_at = r.pos;
        let dtype = r.u8("dtype")?;
        if dtype != DTYPE_F32 {
            return Err(bad(dtype_at, format!("unsupported dtype {dtype} for {name}")));
        }
        let rank = r.u8("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32("dimension")? as usize);
        }
        let numel = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|n| n.checked_mul(4).map(|_| n))
            .ok_or_else(|| bad(dtype_at, format!("shape {shape:?} of {name} is too large")))?;
        let raw = r.take(numel * 4, "tensor data")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if tensors.insert(name.clone(), FloatTensor { shape, data }).is_some() {
            return Err(bad(at, format!("duplicate tensor {name}")));
        }
    }
    if r.pos != buf.len() {
        return Err(bad(r.pos, format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(ModelWeights { tensors })
}

pub fn encode(weights: &ModelWeights) -> Result<Vec<u8>, WeightsError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let count = u32::try_from(weights.tensors.len()).map_err(|_| bad(8, "too many tensors"))?;
    out.extend_from_slice(&count.to_le_bytes());
    for (name, t) in &weights.tensors {
        let at = out.len();
        let len =
            u16::try_from(name.len()).map_err(|_| bad(at, format!("name of {} bytes is too long", name.len())))?;
        let rank = u8::try_from(t.shape.len()).map_err(|_| bad(at, format!("rank of {name} is too large")))?;
        if t.shape.iter().product::<usize>() != t.data.len() {
            return Err(bad(
                at,
                format!("{name}: data length does not match shape {:?}", t.shape),
            ));
        }
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(DTYPE_F32);
        out.push(rank);
        for &d in &t.shape {
            let d = u32::try_from(d).map_err(|_| bad(at, format!("dimension {d} of {name} is too large")))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for &v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn load_weights(path: &Path) -> Result<ModelWeights, WeightsError> {
    decode(&std::fs::read(path)?)
}

pub fn save_weights(weights: &ModelWeights, path: &Path) -> Result<(), WeightsError> {
    std::fs::write(path, encode(weights)?)?;
    Ok(())
}
