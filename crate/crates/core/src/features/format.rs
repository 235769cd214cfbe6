//! `COFX` feature files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "COFX" | version u16 | T u32 | D u32 | block count u16
//! per block: name length u8 | name bytes | offset u32 | width u32
//! T * D f64 values, row-major
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::sequence::{Block, FeatureSequence};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"COFX";
pub const FEATURE_VERSION: u16 = 1;

pub fn write_features(seq: &FeatureSequence, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(seq)?)?;
    Ok(())
}

/// Reads a feature file; the video id is taken from the file stem.
pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSequence> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode(&bytes, &id)
}

pub(crate) fn encode(seq: &FeatureSequence) -> Result<Vec<u8>> {
    let too_big = |what: &str| Error::invalid(format!("{what} does not fit the feature file format"));
    let t = u32::try_from(seq.frames()).map_err(|_| too_big("frame count"))?;
    let d = u32::try_from(seq.dim()).map_err(|_| too_big("dimension"))?;
    let count = u16::try_from(seq.blocks().len()).map_err(|_| too_big("block count"))?;

    let mut out = Vec::with_capacity(32 + seq.frames() * seq.dim() * 8);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for b in seq.blocks() {
        let name = b.name.as_bytes();
        let len = u8::try_from(name.len()).map_err(|_| too_big("block name"))?;
        out.push(len);
        out.extend_from_slice(name);
        out.extend_from_slice(&(b.offset as u32).to_le_bytes());
        out.extend_from_slice(&(b.width as u32).to_le_bytes());
    }
    for v in seq.data().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!("truncated {what}: need {n} bytes, {} left", self.bytes.len() - self.pos),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub(crate) fn decode(bytes: &[u8], video_id: &str) -> Result<FeatureSequence> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != FEATURE_MAGIC {
        return Err(Error::format(0, "bad magic, expected COFX"));
    }
    let version = cur.u16("version")?;
    if version != FEATURE_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let t = cur.u32("frame count")? as usize;
    let d = cur.u32("dimension")? as usize;
    let table_start = cur.pos as u64;
    let count = cur.u16("block count")?;

    let mut blocks = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = cur.u8("block name length")? as usize;
        let name_at = cur.pos as u64;
        let name = std::str::from_utf8(cur.take(len, "block name")?)
            .map_err(|_| Error::format(name_at, "block name is not UTF-8"))?;
        let offset = cur.u32("block offset")? as usize;
        let width = cur.u32("block width")? as usize;
        blocks.push(Block::new(name, offset, width));
    }

    let payload_at = cur.pos;
    let expected = t
        .checked_mul(d)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::format(6, format!("dimension overflow: {t} x {d}")))?;
    let remaining = bytes.len() - payload_at;
    if remaining != expected {
        return Err(Error::format(
            payload_at as u64,
            format!("header declares {t} x {d} values ({expected} bytes), payload has {remaining}"),
        ));
    }

    let mut values = Vec::with_capacity(t * d);
    for (i, chunk) in bytes[payload_at..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format((payload_at + i * 8) as u64, "non-finite feature value"));
        }
        values.push(v);
    }
    let data = Array2::from_shape_vec((t, d), values).map_err(|e| Error::format(payload_at as u64, e.to_string()))?;
    FeatureSequence::new(video_id, data, blocks).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::format(table_start, msg),
        other => other,
    })
}
