//! `COFM` model checkpoints.
//!
//! ```text
//! "COFM" | version u16 | input u32 | hidden count u16 | hidden widths u32...
//! score branch, then weight branch; per layer:
//!     weights (out x in, row-major f64) | bias (out f64)
//! FNV-1a 64 of every preceding byte, u64
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::hash::Hasher;
use std::path::Path;

use fnv::FnvHasher;

use super::{MlpSpec, ModelParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"COFM";
pub const CHECKPOINT_VERSION: u16 = 1;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

pub(crate) fn encode(params: &ModelParams) -> Vec<u8> {
    let spec = &params.spec;
    let mut out = Vec::with_capacity(16 + params.param_count() * 8);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.input as u32).to_le_bytes());
    out.extend_from_slice(&(spec.hidden.len() as u16).to_le_bytes());
    for &w in &spec.hidden {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    for (_, tensor) in params.tensors() {
        for v in tensor {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

pub(crate) fn decode(bytes: &[u8]) -> Result<ModelParams> {
    let short = |at: usize, what: &str| Error::format(at as u64, format!("truncated {what}"));
    if bytes.len() < 4 {
        return Err(short(0, "magic"));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::format(0, "bad magic, expected COFM"));
    }
    if bytes.len() < 4 + 2 + 4 + 2 + 8 {
        return Err(short(4, "header"));
    }
    let body_len = bytes.len() - 8;
    let stored = u64::from_le_bytes(bytes[body_len..].try_into().unwrap());
    if fnv1a(&bytes[..body_len]) != stored {
        return Err(Error::format(body_len as u64, "checksum mismatch"));
    }
    let body = &bytes[..body_len];

    let version = u16::from_le_bytes([body[4], body[5]]);
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let input = u32::from_le_bytes(body[6..10].try_into().unwrap()) as usize;
    let n_hidden = u16::from_le_bytes([body[10], body[11]]) as usize;
    let mut pos = 12;
    let mut hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        let chunk = body.get(pos..pos + 4).ok_or_else(|| short(pos, "hidden widths"))?;
        hidden.push(u32::from_le_bytes(chunk.try_into().unwrap()) as usize);
        pos += 4;
    }
    let spec = MlpSpec::new(input, hidden).map_err(|e| Error::format(6, e.to_string()))?;

    let mut params = ModelParams::zeros(&spec);
    let needed = params.param_count() * 8;
    if body.len() - pos != needed {
        return Err(Error::format(
            pos as u64,
            format!(
                "parameter block holds {} bytes, layer widths need {needed}",
                body.len() - pos
            ),
        ));
    }
    for tensor in params.tensors_mut() {
        for v in tensor {
            *v = f64::from_le_bytes(body[pos..pos + 8].try_into().unwrap());
            pos += 8;
        }
    }
    Ok(params)
}

pub fn write_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(params))?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    decode(&fs::read(path)?)
}
