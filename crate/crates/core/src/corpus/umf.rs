//! UMF1 region-feature container.
//!
//! Layout (little-endian): `b"UMF1"`, `u32` image count, then per image a
//! `u16` id length, the UTF-8 id, `u32` N, `u32` d, N×d `f32` regions
//! (row-major) and N×4 `f32` boxes.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{CorpusError, FeatureStore, ImageFeatures, Result};

pub const UMF_MAGIC: &[u8; 4] = b"UMF1";

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(CorpusError::Truncated(what.to_string())),
        }
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, count: usize, what: &str) -> Result<Vec<f32>> {
        let bytes = self.take(
            count
                .checked_mul(4)
                .ok_or_else(|| CorpusError::Truncated(what.into()))?,
            what,
        )?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Decodes a UMF1 byte buffer.
pub fn read_image_features(bytes: &[u8]) -> Result<FeatureStore> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic").map_err(|_| CorpusError::BadMagic)? != UMF_MAGIC {
        return Err(CorpusError::BadMagic);
    }
    let count = r.u32("image count")? as usize;
    let mut store = FeatureStore::new(0);
    for i in 0..count {
        let id_len = r.u16("id length")? as usize;
        let id = std::str::from_utf8(r.take(id_len, "image id")?)
            .map_err(|e| CorpusError::Invalid(format!("image {i}: id is not UTF-8: {e}")))?
            .to_string();
        let n = r.u32("region count")? as usize;
        let d = r.u32("feature dimension")? as usize;
        if i > 0 && d != store.dim() {
            return Err(CorpusError::DimensionMismatch {
                image_id: id,
                expected: store.dim(),
                found: d,
            });
        }
        let regions = r.f32s(n * d, &format!("regions of `{id}`"))?;
        let boxes = r.f32s(n * 4, &format!("boxes of `{id}`"))?;
        let regions = Array2::from_shape_vec((n, d), regions).expect("shape checked");
        let boxes = Array2::from_shape_vec((n, 4), boxes).expect("shape checked");
        store.insert(ImageFeatures {
            image_id: id,
            regions,
            boxes,
        })?;
    }
    if r.pos != bytes.len() {
        return Err(CorpusError::Invalid(format!(
            "{} trailing bytes after last image",
            bytes.len() - r.pos
        )));
    }
    Ok(store)
}

pub fn load_image_features(path: impl AsRef<Path>) -> Result<FeatureStore> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_image_features(&bytes)
}

/// Encodes a store in UMF1 layout, images in store order.
pub fn encode_image_features(store: &FeatureStore) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(UMF_MAGIC);
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for image in store.iter() {
        let id = image.image_id.as_bytes();
        let id_len = u16::try_from(id.len())
            .map_err(|_| CorpusError::Invalid(format!("image id `{}` too long", image.image_id)))?;
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&(image.num_regions() as u32).to_le_bytes());
        out.extend_from_slice(&(image.dim() as u32).to_le_bytes());
        for v in image.regions.iter().chain(image.boxes.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_image_features(store: &FeatureStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_image_features(store)?).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}
