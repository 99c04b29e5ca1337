//! Weight checkpoint file.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic    8 bytes "CKPT0001"
//! digest   u16 length + config digest string (hex)
//! count    u32 named tensors
//! per tensor:
//!     name  u16 length + UTF-8 bytes
//!     rank  u8, then rank u32 dims
//!     data  product(dims) f64 values
//! ```

use std::path::Path;

use super::Model;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"CKPT0001";

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let digest = model.config.digest();
    out.extend_from_slice(&(digest.len() as u16).to_le_bytes());
    out.extend_from_slice(digest.as_bytes());

    let entries = model.export_state();
    out.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for (name, shape, data) in &entries {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(shape.len() as u8);
        for &d in shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

/// Load weights into an already-built model. The checkpoint's config digest
/// must match the model's.
pub fn load_checkpoint(model: &mut Model, path: impl AsRef<Path>) -> Result<()> {
    let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    let corrupt = |what: &str| Error::CorruptFile(format!("checkpoint: {what}"));
    if bytes.len() < 10 || &bytes[0..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut pos = 8usize;
    let rd = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        let s = bytes.get(*pos..*pos + n).ok_or_else(|| corrupt("truncated"))?;
        *pos += n;
        Ok(s)
    };

    let dlen = u16::from_le_bytes(rd(&mut pos, 2)?.try_into().unwrap()) as usize;
    let digest = std::str::from_utf8(rd(&mut pos, dlen)?)
        .map_err(|_| corrupt("non-utf8 digest"))?
        .to_string();
    if digest != model.config.digest() {
        return Err(Error::Config(format!(
            "checkpoint was trained with config digest {digest}, model has {}",
            model.config.digest()
        )));
    }

    let count = u32::from_le_bytes(rd(&mut pos, 4)?.try_into().unwrap()) as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let nlen = u16::from_le_bytes(rd(&mut pos, 2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(rd(&mut pos, nlen)?)
            .map_err(|_| corrupt("non-utf8 name"))?
            .to_string();
        let rank = rd(&mut pos, 1)?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(u32::from_le_bytes(rd(&mut pos, 4)?.try_into().unwrap()) as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f64::from_le_bytes(rd(&mut pos, 8)?.try_into().unwrap()));
        }
        entries.push((name, shape, data));
    }
    model.import_state(&entries)
}
