//! NEFF field dumps: the magic `NEFF`, `n` and `N` as little-endian `u32`,
//! then the `N^{2n}` values as little-endian `f64` in grid order.

use std::path::Path;

use neflab_core::{Grid, PeriodicField};

use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 4] = b"NEFF";
const HEADER: usize = 12;

pub fn encode(field: &PeriodicField) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER + 8 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.points() as u32).to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a dump; the error string says what is wrong with it.
pub fn decode(bytes: &[u8]) -> std::result::Result<PeriodicField, String> {
    if bytes.len() < HEADER {
        return Err(format!("truncated header ({} bytes)", bytes.len()));
    }
    if &bytes[..4] != MAGIC {
        return Err("bad magic".into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (n, points) = (word(4), word(8));
    let grid = Grid::new(n, points).map_err(|e| e.to_string())?;
    let expected = HEADER + 8 * grid.len();
    if bytes.len() != expected {
        return Err(format!("expected {expected} bytes for n = {n}, N = {points}, found {}", bytes.len()));
    }
    let values = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    PeriodicField::new(grid, values).map_err(|e| e.to_string())
}

pub fn write(path: &Path, field: &PeriodicField) -> Result<()> {
    std::fs::write(path, encode(field)).map_err(LabError::io(path))
}

pub fn read(path: &Path) -> Result<PeriodicField> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(LabError::MissingArtifacts { path: path.to_path_buf() })
        }
        Err(e) => return Err(LabError::io(path)(e)),
    };
    decode(&bytes).map_err(|reason| LabError::Format { path: path.to_path_buf(), reason })
}
