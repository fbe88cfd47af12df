//! On-disk embedding cache.
//!
//! One file per (provider, model, dimension, seed, text) key. The value is a
//! 16-byte header (8-byte magic, little-endian u32 dimension, 4 reserved
//! bytes) followed by the vector as little-endian f32s. Corrupt or
//! mismatched files are treated as misses and overwritten.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

const MAGIC: &[u8; 8] = b"LITEMB01";
const HEADER_LEN: usize = 16;

/// Content-addressed key for one embedding request.
pub fn cache_key(kind: &str, model: &str, dimension: usize, seed: u64, text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(kind.as_bytes());
    hasher.update([0x1f]);
    hasher.update(model.as_bytes());
    hasher.update([0x1f]);
    hasher.update((dimension as u64).to_le_bytes());
    hasher.update(seed.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

fn entry_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.emb"))
}

/// Reads a cached vector, returning `None` on miss or on any corruption.
pub fn read(dir: &Path, key: &str, dimension: usize) -> Option<Vec<f64>> {
    let path = entry_path(dir, key);
    let mut file = fs::File::open(path).ok()?;
    let mut header = [0u8; HEADER_LEN];
    file.read_exact(&mut header).ok()?;
    if &header[..8] != MAGIC {
        return None;
    }
    let stored_dim = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    if stored_dim != dimension {
        return None;
    }
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).ok()?;
    if payload.len() != dimension * 4 {
        return None;
    }
    let mut values = Vec::with_capacity(dimension);
    for chunk in payload.chunks_exact(4) {
        values.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
    }
    Some(values)
}

/// Writes a vector atomically (temp file + rename), so concurrent readers
/// never observe a partial entry.
pub fn write(dir: &Path, key: &str, values: &[f64]) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let final_path = entry_path(dir, key);
    let tmp_path = dir.join(format!("{key}.tmp.{}", std::process::id()));

    let mut buf = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(values.len() as u32).to_le_bytes());
    buf.extend_from_slice(&[0u8; 4]);
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }

    {
        let mut file = fs::File::create(&tmp_path)?;
        file.write_all(&buf)?;
        file.sync_all()?;
    }
    fs::rename(&tmp_path, &final_path)?;
    Ok(())
}
