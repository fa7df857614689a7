//! Disk cache for embedding vectors.
//!
//! One file per key; the filename is the hex SHA-256 of
//! `(config fingerprint, text)`. File body: 16-byte header
//! `{magic "STEERVEC", version u32 LE, dim u32 LE}` followed by the
//! components as little-endian f32.

use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"STEERVEC";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct EmbeddingCache {
    dir: PathBuf,
}

impl EmbeddingCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<EmbeddingCache> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(EmbeddingCache { dir })
    }

    pub fn key(fingerprint: &str, text: &str) -> String {
        let mut h = Sha256::new();
        h.update(fingerprint.as_bytes());
        h.update([0u8]);
        h.update(text.as_bytes());
        hex(&h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(key)
    }

    pub fn get(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let path = self.path(key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        Ok(Some(decode(&bytes)?))
    }

    /// Last-writer-wins is fine: values for a key are deterministic.
    pub fn put(&self, key: &str, values: &[f64]) -> Result<()> {
        let tmp = self.path(&format!("{key}.tmp"));
        std::fs::write(&tmp, encode(values))?;
        std::fs::rename(&tmp, self.path(key))?;
        Ok(())
    }
}

fn encode(values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + values.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(values.len() as u32).to_le_bytes());
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::Format("bad embedding cache header".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::FormatVersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    if bytes.len() != 16 + dim * 4 {
        return Err(Error::Format("embedding cache file truncated".into()));
    }
    Ok(bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
