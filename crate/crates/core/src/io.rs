//! File formats.
//!
//! Heightfield binary layout, all little-endian:
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | ASCII `ABHF`                              |
//! | 4      | 4    | `u32` grid size N                         |
//! | 8      | 4    | `i32` field id (cascade index, -1 = composed) |
//! | 12     | 4    | `f32` time in seconds                     |
//! | 16     | 4 N² | `f32` values, row-major                   |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ABHF";
pub const COMPOSED_ID: i32 = -1;
pub const HEADER_LEN: usize = 16;
/// Grids up to this size also get a CSV copy.
pub const CSV_MAX_N: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct Heightfield {
    pub n: u32,
    pub id: i32,
    pub time: f32,
    pub values: Vec<f32>,
}

pub fn encode_heightfield(n: usize, id: i32, time: f64, values: &[f64]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&id.to_le_bytes());
    buf.extend_from_slice(&(time as f32).to_le_bytes());
    for v in values {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    buf
}

pub fn decode_heightfield(bytes: &[u8]) -> Result<Heightfield> {
    let bad = |m: &str| Error::Invariant(format!("heightfield: {m}"));
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(bad("missing ABHF header"));
    }
    let word = |o: usize| [bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]];
    let n = u32::from_le_bytes(word(4));
    let id = i32::from_le_bytes(word(8));
    let time = f32::from_le_bytes(word(12));
    let count = (n as usize) * (n as usize);
    if bytes.len() != HEADER_LEN + 4 * count {
        return Err(bad("payload length does not match N"));
    }
    let values = (0..count).map(|i| f32::from_le_bytes(word(HEADER_LEN + 4 * i))).collect();
    Ok(Heightfield { n, id, time, values })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn write_heightfield(path: &Path, n: usize, id: i32, time: f64, values: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(&encode_heightfield(n, id, time, values))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_heightfield(path: &Path) -> Result<Heightfield> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_heightfield(&bytes)
}

/// One CSV row per grid row.
pub fn write_grid_csv(path: &Path, n: usize, values: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    for row in values.chunks(n) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes the binary file and, for small grids, a sibling `.csv`.
pub fn export_heightfield(path: &Path, n: usize, id: i32, time: f64, values: &[f64]) -> Result<()> {
    write_heightfield(path, n, id, time, values)?;
    if n <= CSV_MAX_N {
        write_grid_csv(&path.with_extension("csv"), n, values)?;
    }
    Ok(())
}

/// Buffered CSV file with a fixed header.
pub struct CsvWriter {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut inner = create(path)?;
        writeln!(inner, "{}", header.join(",")).map_err(|e| Error::io(path, e))?;
        Ok(Self { path: path.to_path_buf(), inner })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        let line: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        writeln!(self.inner, "{}", line.join(",")).map_err(|e| Error::io(&self.path, e))
    }

    pub fn text_row(&mut self, fields: &[String]) -> Result<()> {
        writeln!(self.inner, "{}", fields.join(",")).map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let bytes = encode_heightfield(2, COMPOSED_ID, 1.5, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(&bytes[..4], b"ABHF");
        assert_eq!(bytes.len(), 16 + 16);
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(i32::from_le_bytes(bytes[8..12].try_into().unwrap()), -1);
        assert_eq!(f32::from_le_bytes(bytes[12..16].try_into().unwrap()), 1.5);
        let h = decode_heightfield(&bytes).unwrap();
        assert_eq!(h.values, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(decode_heightfield(&bytes[..20]).is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b/h.bin");
        export_heightfield(&p, 2, 3, 0.25, &[0.5, -1.0, 2.0, 0.0]).unwrap();
        let h = read_heightfield(&p).unwrap();
        assert_eq!((h.n, h.id, h.time), (2, 3, 0.25));
        let csv = std::fs::read_to_string(p.with_extension("csv")).unwrap();
        assert_eq!(csv, "0.5,-1\n2,0\n");
    }
}
