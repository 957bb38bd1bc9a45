//! ACRW weight files: `"ACRW"`, `u32` version, `u32` tensor count, then per
//! tensor a `u16` name length, UTF-8 name, `u8` rank, `u32` dims and an `f32`
//! payload. All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use super::{NetworkWeights, NnError, Tensor};

pub const MAGIC: &[u8; 4] = b"ACRW";
pub const VERSION: u32 = 1;

pub fn encode_weights(weights: &NetworkWeights) -> Result<Vec<u8>, NnError> {
    let mut out = Vec::with_capacity(12 + weights.param_count() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(weights.len() as u32).to_le_bytes());
    for (name, t) in weights.tensors() {
        let name_len = u16::try_from(name.len()).map_err(|_| NnError::InvalidName)?;
        let rank = u8::try_from(t.shape().len()).map_err(|_| NnError::ShapeMismatch(format!("rank of {name}")))?;
        out.extend_from_slice(&name_len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(rank);
        for &d in t.shape() {
            let d = u32::try_from(d).map_err(|_| NnError::ShapeMismatch(format!("dimension of {name}")))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(NnError::Truncated)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<NetworkWeights, NnError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic = r.take(4).map_err(|_| NnError::BadMagic)?;
    if magic != MAGIC {
        return Err(NnError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NnError::UnsupportedVersion(version));
    }
    let count = r.u32()?;
    let mut tensors = Vec::new();
    for _ in 0..count {
        let name_len = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
        let name = std::str::from_utf8(r.take(name_len as usize)?).map_err(|_| NnError::InvalidName)?.to_string();
        let rank = r.take(1)?[0];
        let mut shape = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let n = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or(NnError::Truncated)?;
        let payload = r.take(n.checked_mul(4).ok_or(NnError::Truncated)?)?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        tensors.push((name, Tensor::new(shape, data)?));
    }
    if r.pos != bytes.len() {
        return Err(NnError::ShapeMismatch(format!("{} trailing bytes after last tensor", bytes.len() - r.pos)));
    }
    Ok(NetworkWeights::new(tensors))
}

pub fn save_weights(path: impl AsRef<Path>, weights: &NetworkWeights) -> Result<(), NnError> {
    fs::write(path, encode_weights(weights)?)?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<NetworkWeights, NnError> {
    decode_weights(&fs::read(path)?)
}
