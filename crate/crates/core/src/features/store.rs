//! Single-file keyed feature store.
//!
//! Byte layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  "CFSTORE1"
//! count   u32      number of entries
//! key table, repeated `count` times in sorted key order:
//!     key_len u16, key bytes (UTF-8), entry_offset u64 (absolute)
//! entries, same order:
//!     label    u8   class index 0..3
//!     split    u8   0 train, 1 val, 2 test
//!     clin_len u16, then one byte per clinical bit
//!     height   u32, width u32, then height*width*3 f32 heatmap pixels
//!     mfcc_len u32 (= 13), then mfcc_len f64 coefficients
//! ```
//!
//! Keys are `"{record_id}/{chunk_index:04}"`. Entries are written in sorted
//! key order, so the file bytes are independent of insertion order.

use std::collections::BTreeMap;
use std::path::Path;

use super::{FeatureTriple, HeatmapImage, MfccVector, N_MFCC};
use crate::ingest::{ClassLabel, ClinicalVector, Split};
use crate::{digest, Error, Result};

const MAGIC: &[u8; 8] = b"CFSTORE1";

#[derive(Debug, Default, Clone)]
pub struct FeatureStore {
    entries: BTreeMap<String, FeatureTriple>,
}

impl FeatureStore {
    pub fn new() -> FeatureStore {
        FeatureStore::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &FeatureTriple)> {
        self.entries.iter()
    }

    /// Insert one triple. Duplicate keys are rejected, not overwritten.
    pub fn put(&mut self, triple: FeatureTriple) -> Result<()> {
        let key = triple.key();
        if self.entries.contains_key(&key) {
            return Err(Error::DuplicateKey(key));
        }
        self.entries.insert(key, triple);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<&FeatureTriple> {
        self.entries
            .get(key)
            .ok_or_else(|| Error::KeyNotFound(key.to_string()))
    }

    /// All triples belonging to a split, in key order.
    pub fn by_split(&self, split: Split) -> Vec<&FeatureTriple> {
        self.entries.values().filter(|t| t.split == split).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bodies: Vec<(String, Vec<u8>)> = Vec::with_capacity(self.entries.len());
        for (key, t) in &self.entries {
            let mut b = Vec::new();
            b.push(t.label.index() as u8);
            b.push(match t.split {
                Split::Train => 0u8,
                Split::Val => 1,
                Split::Test => 2,
            });
            b.extend_from_slice(&(t.clinical.bits.len() as u16).to_le_bytes());
            b.extend_from_slice(&t.clinical.bits);
            b.extend_from_slice(&(t.heatmap.height as u32).to_le_bytes());
            b.extend_from_slice(&(t.heatmap.width as u32).to_le_bytes());
            for &p in &t.heatmap.pixels {
                b.extend_from_slice(&p.to_le_bytes());
            }
            b.extend_from_slice(&(N_MFCC as u32).to_le_bytes());
            for &c in &t.mfcc.coeffs {
                b.extend_from_slice(&c.to_le_bytes());
            }
            bodies.push((key.clone(), b));
        }

        let table_len: usize = bodies.iter().map(|(k, _)| 2 + k.len() + 8).sum();
        let mut offset = MAGIC.len() + 4 + table_len;

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(bodies.len() as u32).to_le_bytes());
        for (key, body) in &bodies {
            out.extend_from_slice(&(key.len() as u16).to_le_bytes());
            out.extend_from_slice(key.as_bytes());
            out.extend_from_slice(&(offset as u64).to_le_bytes());
            offset += body.len();
        }
        for (_, body) in &bodies {
            out.extend_from_slice(body);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<FeatureStore> {
        let corrupt = |what: &str| Error::CorruptFile(format!("feature store: {what}"));
        if bytes.len() < 12 || &bytes[0..8] != MAGIC {
            return Err(corrupt("bad magic"));
        }
        let count = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let mut pos = 12usize;
        let mut table = Vec::with_capacity(count);
        for _ in 0..count {
            let key_len =
                u16::from_le_bytes(bytes.get(pos..pos + 2).ok_or_else(|| corrupt("truncated key table"))?.try_into().unwrap()) as usize;
            pos += 2;
            let key = std::str::from_utf8(bytes.get(pos..pos + key_len).ok_or_else(|| corrupt("truncated key"))?)
                .map_err(|_| corrupt("non-utf8 key"))?
                .to_string();
            pos += key_len;
            let offset =
                u64::from_le_bytes(bytes.get(pos..pos + 8).ok_or_else(|| corrupt("truncated offset"))?.try_into().unwrap()) as usize;
            pos += 8;
            table.push((key, offset));
        }

        let mut store = FeatureStore::new();
        for (key, offset) in table {
            let mut p = offset;
            let rd = |p: &mut usize, n: usize| -> Result<&[u8]> {
                let s = bytes.get(*p..*p + n).ok_or_else(|| corrupt("truncated entry"))?;
                *p += n;
                Ok(s)
            };
            let label = ClassLabel::from_index(rd(&mut p, 1)?[0] as usize)
                .ok_or_else(|| corrupt("bad label byte"))?;
            let split = match rd(&mut p, 1)?[0] {
                0 => Split::Train,
                1 => Split::Val,
                2 => Split::Test,
                _ => return Err(corrupt("bad split byte")),
            };
            let clin_len = u16::from_le_bytes(rd(&mut p, 2)?.try_into().unwrap()) as usize;
            let bits = rd(&mut p, clin_len)?.to_vec();
            let height = u32::from_le_bytes(rd(&mut p, 4)?.try_into().unwrap()) as usize;
            let width = u32::from_le_bytes(rd(&mut p, 4)?.try_into().unwrap()) as usize;
            let mut pixels = Vec::with_capacity(height * width * 3);
            for _ in 0..height * width * 3 {
                pixels.push(f32::from_le_bytes(rd(&mut p, 4)?.try_into().unwrap()));
            }
            let mfcc_len = u32::from_le_bytes(rd(&mut p, 4)?.try_into().unwrap()) as usize;
            if mfcc_len != N_MFCC {
                return Err(corrupt("unexpected mfcc length"));
            }
            let mut coeffs = [0.0f64; N_MFCC];
            for c in &mut coeffs {
                *c = f64::from_le_bytes(rd(&mut p, 8)?.try_into().unwrap());
            }

            let (record_id, chunk_index) = key
                .rsplit_once('/')
                .and_then(|(id, idx)| idx.parse::<usize>().ok().map(|i| (id.to_string(), i)))
                .ok_or_else(|| corrupt("malformed key"))?;

            store.put(FeatureTriple {
                record_id,
                chunk_index,
                label,
                split,
                heatmap: HeatmapImage {
                    height,
                    width,
                    pixels,
                },
                mfcc: MfccVector { coeffs },
                clinical: ClinicalVector { bits },
            })?;
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_bytes()).map_err(|e| Error::io(path.as_ref(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FeatureStore> {
        let bytes = std::fs::read(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        FeatureStore::from_bytes(&bytes)
    }

    /// Digest of the serialized bytes; equal stores serialize identically.
    pub fn digest(&self) -> String {
        digest::hex_digest(&self.to_bytes())
    }
}
