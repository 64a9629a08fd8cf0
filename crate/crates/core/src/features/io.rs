//! `LOBF` binary feature matrices, their row-index sidecars, and a lossy
//! delimited-text export for eyeballing.
//!
//! Layout: `b"LOBF"`, version `u32`, rows `u64`, cols `u64`, then
//! `rows * cols` little-endian `f64` in row-major order.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::book::StockDay;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LOBF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;
pub const INDEX_HEADER: &str = "row,stock_id,day_id,timestamp,block_index";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }
}

/// Row → origin mapping stored next to a matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIndex {
    pub key: StockDay,
    pub timestamp: i64,
    pub block_index: usize,
}

pub fn write_matrix_to(mut w: impl Write, m: &FeatureMatrix) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m.rows as u64).to_le_bytes())?;
    w.write_all(&(m.cols as u64).to_le_bytes())?;
    for v in &m.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_matrix_from(mut r: impl Read) -> Result<FeatureMatrix> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("LOBF header: {e}")))?;
    if &header[..4] != MAGIC {
        return Err(Error::Format("not a LOBF file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported LOBF version {version}")));
    }
    let rows = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(header[16..24].try_into().expect("8 bytes")) as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("LOBF shape overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Format(format!("LOBF body: {e}")))?;
    if bytes.len() != n * 8 {
        return Err(Error::Format(format!(
            "LOBF body holds {} bytes, header says {rows}x{cols}",
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(FeatureMatrix { rows, cols, data })
}

pub fn write_matrix(path: &Path, m: &FeatureMatrix) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix_to(BufWriter::new(f), m).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path) -> Result<FeatureMatrix> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix_from(BufReader::new(f))
}

pub fn write_index(path: &Path, index: &[RowIndex]) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "{INDEX_HEADER}").map_err(io)?;
    for (i, r) in index.iter().enumerate() {
        writeln!(w, "{i},{},{},{},{}", r.key.stock_id, r.key.day_id, r.timestamp, r.block_index).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_index(path: &Path) -> Result<Vec<RowIndex>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    match lines.next() {
        Some(Ok(h)) if h == INDEX_HEADER => {}
        _ => return Err(perr(1, format!("expected header {INDEX_HEADER:?}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(perr(i + 2, "expected 5 fields".into()));
        }
        let num = |s: &str| s.parse::<i64>().map_err(|e| perr(i + 2, e.to_string()));
        out.push(RowIndex {
            key: StockDay::new(f[1], num(f[2])? as u32),
            timestamp: num(f[3])?,
            block_index: num(f[4])? as usize,
        });
    }
    Ok(out)
}

/// Delimited-text export with six decimals. Not round-trippable.
pub fn write_diagnostic_csv(path: &Path, m: &FeatureMatrix, names: &[String], index: &[RowIndex]) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    write!(w, "stock_id,day_id,block_index").map_err(io)?;
    for n in names {
        write!(w, ",{n}").map_err(io)?;
    }
    writeln!(w).map_err(io)?;
    for (row, ix) in m.iter_rows().zip(index) {
        write!(w, "{},{},{}", ix.key.stock_id, ix.key.day_id, ix.block_index).map_err(io)?;
        for v in row {
            write!(w, ",{v:.6}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn matrix_round_trip_is_bit_exact(
            cols in 1usize..8,
            raw in prop::collection::vec(any::<u64>(), 0..64),
        ) {
            let rows = raw.len() / cols;
            let data: Vec<f64> = raw[..rows * cols].iter().map(|b| f64::from_bits(*b)).collect();
            let m = FeatureMatrix { rows, cols, data };
            let mut buf = Vec::new();
            write_matrix_to(&mut buf, &m).unwrap();
            let back = read_matrix_from(buf.as_slice()).unwrap();
            prop_assert_eq!(back.rows, rows);
            let a: Vec<u64> = m.data.iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.data.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn truncated_and_foreign_files_are_rejected() {
        let m = FeatureMatrix { rows: 2, cols: 2, data: vec![1.0, 2.0, 3.0, 4.0] };
        let mut buf = Vec::new();
        write_matrix_to(&mut buf, &m).unwrap();
        assert!(read_matrix_from(&buf[..buf.len() - 1]).is_err());
        buf[0] = b'X';
        assert!(read_matrix_from(buf.as_slice()).is_err());
    }

    #[test]
    fn index_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.index.csv");
        let idx = vec![
            RowIndex { key: StockDay::new("A", 1), timestamp: 5, block_index: 49 },
            RowIndex { key: StockDay::new("B", 2), timestamp: 9, block_index: 50 },
        ];
        write_index(&p, &idx).unwrap();
        assert_eq!(read_index(&p).unwrap(), idx);
    }
}
