//! Versioned checkpoint container.
//!
//! Layout (little-endian): `b"UMCK"`, `u32` version, `u32` config length,
//! config JSON, `u32` tensor count, then per tensor a `u16` name length, the
//! name, `u8` rank, `u32` dims, and `f64` values; finally the first 8 bytes
//! of the SHA-256 of everything before them.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{ScorerConfig, ScorerError, ScorerModel, ScorerParams};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"UMCK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn checkpoint_to_bytes(model: &ScorerModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let config = serde_json::to_vec(&model.config).expect("config serializes");
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    let tensors = model.params.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, shape, data) in tensors {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(shape.len() as u8);
        for d in shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest[..8]);
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ScorerError> {
        if self.buf.len() - self.pos < n {
            return Err(ScorerError::Corrupt(format!("truncated at byte {}", self.pos)));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, ScorerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<ScorerModel, ScorerError> {
    if bytes.len() < 8 + 8 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(ScorerError::Corrupt("missing checkpoint magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(ScorerError::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 8);
    if Sha256::digest(body)[..8] != *checksum {
        return Err(ScorerError::Corrupt("checksum mismatch".into()));
    }

    let mut c = Cursor { buf: body, pos: 8 };
    let config_len = c.u32()? as usize;
    let config: ScorerConfig =
        serde_json::from_slice(c.take(config_len)?).map_err(|e| ScorerError::Corrupt(format!("config: {e}")))?;
    config.validate()?;
    let mut params = ScorerParams::zeros(&config);
    let count = c.u32()? as usize;
    let mut slots = params.tensors_mut();
    if count != slots.len() {
        return Err(ScorerError::Corrupt(format!(
            "{count} tensors, config implies {}",
            slots.len()
        )));
    }
    for (name, shape, data) in slots.iter_mut() {
        let name_len = u16::from_le_bytes(c.take(2)?.try_into().unwrap()) as usize;
        let got_name =
            std::str::from_utf8(c.take(name_len)?).map_err(|_| ScorerError::Corrupt("tensor name".into()))?;
        if got_name != name {
            return Err(ScorerError::Corrupt(format!(
                "expected tensor {name}, found {got_name}"
            )));
        }
        let rank = c.take(1)?[0] as usize;
        let dims = (0..rank)
            .map(|_| c.u32().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        if dims != *shape {
            return Err(ScorerError::Corrupt(format!(
                "tensor {name} has shape {dims:?}, expected {shape:?}"
            )));
        }
        let raw = c.take(data.len() * 8)?;
        for (dst, chunk) in data.iter_mut().zip(raw.chunks_exact(8)) {
            *dst = f64::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    drop(slots);
    if c.pos != body.len() {
        return Err(ScorerError::Corrupt("trailing bytes".into()));
    }
    if !params.all_finite() {
        return Err(ScorerError::Corrupt("non-finite parameter".into()));
    }
    ScorerModel::from_parts(config, params)
}

pub fn save_checkpoint(model: &ScorerModel, path: impl AsRef<Path>) -> Result<(), ScorerError> {
    let path = path.as_ref();
    fs::write(path, checkpoint_to_bytes(model)).map_err(|source| ScorerError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ScorerModel, ScorerError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ScorerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    checkpoint_from_bytes(&bytes)
}
