//! Binary cache for factor-count tables.
//!
//! # Format (`EKW1`)
//!
//! ```text
//! offset  size      field
//! 0       4         magic bytes "EKW1"
//! 4       1         version byte (currently 1)
//! 5       8         limit, u64 little endian
//! 13      8         cutoff, u64 little endian (0 = unrestricted)
//! 21      limit     one count byte per integer 1..=limit
//! ```
//!
//! Every cache file is shadowed by a `<name>.sha256` sidecar holding the hex
//! digest of the whole file. The loader recomputes the digest and refuses a
//! mismatch, so a single flipped byte is detected. A missing sidecar is
//! tolerated (the file may come from elsewhere) but a present one must match.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::primes::OmegaTable;

pub const CACHE_MAGIC: [u8; 4] = *b"EKW1";
pub const CACHE_VERSION: u8 = 1;

/// Canonical file name for a table: `omega_<limit>_<cutoff|full>.ekw`.
pub fn cache_file_name(limit: u64, cutoff: Option<u64>) -> String {
    match cutoff {
        Some(b) => format!("omega_{limit}_{b}.ekw"),
        None => format!("omega_{limit}_full.ekw"),
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".sha256");
    PathBuf::from(os)
}

/// Hex SHA-256 of a file, streaming.
pub fn file_sha256_hex(path: &Path) -> Result<String> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let read = reader.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Write a table and its digest sidecar; returns the digest.
pub fn write_omega_cache(path: &Path, table: &OmegaTable) -> Result<String> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut writer = BufWriter::new(File::create(path)?);
    writer.write_all(&CACHE_MAGIC)?;
    writer.write_all(&[CACHE_VERSION])?;
    writer.write_all(&table.limit().to_le_bytes())?;
    writer.write_all(&table.cutoff().unwrap_or(0).to_le_bytes())?;
    writer.write_all(&table.counts()[1..])?;
    writer.flush()?;
    drop(writer);

    let digest = file_sha256_hex(path)?;
    fs::write(sidecar_path(path), format!("{digest}\n"))?;
    Ok(digest)
}

/// Load a table, rejecting wrong magic or version and any digest mismatch
/// against the sidecar.
pub fn read_omega_cache(path: &Path) -> Result<OmegaTable> {
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        let stored = fs::read_to_string(&sidecar)?;
        let stored = stored.trim();
        let actual = file_sha256_hex(path)?;
        if stored != actual {
            return Err(Error::Cache {
                path: path.to_path_buf(),
                reason: format!("digest mismatch: sidecar has {stored}, file hashes to {actual}"),
            });
        }
    }

    let bad = |reason: &str| Error::Cache {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = [0u8; 21];
    reader
        .read_exact(&mut header)
        .map_err(|_| bad("truncated header"))?;
    if header[0..4] != CACHE_MAGIC {
        return Err(bad("wrong magic bytes"));
    }
    if header[4] != CACHE_VERSION {
        return Err(bad(&format!("unsupported version {}", header[4])));
    }
    let limit = u64::from_le_bytes(header[5..13].try_into().unwrap());
    let raw_cutoff = u64::from_le_bytes(header[13..21].try_into().unwrap());
    if limit < 1 {
        return Err(bad("limit must be >= 1"));
    }
    if limit + 1 > crate::primes::MEMORY_BUDGET_BYTES {
        return Err(bad("recorded limit exceeds the memory budget"));
    }
    let cutoff = if raw_cutoff == 0 {
        None
    } else {
        Some(raw_cutoff)
    };
    if let Some(b) = cutoff {
        if b > limit {
            return Err(bad("cutoff exceeds limit"));
        }
    }

    let mut counts = vec![0u8; (limit + 1) as usize];
    reader
        .read_exact(&mut counts[1..])
        .map_err(|_| bad("truncated count data"))?;
    let mut extra = [0u8; 1];
    if reader.read(&mut extra)? != 0 {
        return Err(bad("trailing bytes after count data"));
    }
    Ok(OmegaTable::from_raw(limit, cutoff, counts))
}
