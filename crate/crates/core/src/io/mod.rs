//! On-disk formats.
//!
//! Two little-endian binary containers share one header layout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic ("TSPE" embeddings, "TSPL" labels)
//! 4       4     version, u32 = 1
//! 8       8     rows / count, u64
//! 16      8     cols, u64            (embeddings only)
//! ..            payload: f32 row-major (TSPE) or u32 (TSPL)
//! ```
//!
//! Label value `0xFFFF_FFFF` marks an unlabeled point.

mod csv;
mod report;

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub use self::csv::{read_csv_embeddings, write_csv_matrix};
pub use self::report::{write_report, ConsistencySummary, EvalReport};

use crate::error::{Error, Result};
use crate::numeric::{DenseMatrix, EmbeddingMatrix};

pub const EMBEDDING_MAGIC: [u8; 4] = *b"TSPE";
pub const LABEL_MAGIC: [u8; 4] = *b"TSPL";
pub const FORMAT_VERSION: u32 = 1;

/// Label value for points without ground truth.
pub const UNLABELED: u32 = u32::MAX;

const EMBEDDING_HEADER: usize = 24;
const LABEL_HEADER: usize = 16;

pub fn write_embeddings(path: impl AsRef<Path>, x: &EmbeddingMatrix) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_embeddings(x)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_embeddings(&bytes)
}

pub fn encode_embeddings(x: &EmbeddingMatrix) -> Result<Vec<u8>> {
    if x.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut out = Vec::with_capacity(EMBEDDING_HEADER + 4 * x.as_slice().len());
    out.extend_from_slice(&EMBEDDING_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(x.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(x.cols() as u64).to_le_bytes());
    for (i, &v) in x.as_slice().iter().enumerate() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::NonFinite {
                row: i / x.cols(),
                col: i % x.cols(),
            });
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let mut cur = Cursor::new(bytes);
    cur.expect_magic(EMBEDDING_MAGIC)?;
    cur.expect_version()?;
    let rows = cur.u64()?;
    let cols = cur.u64()?;
    if rows == 0 {
        return Err(Error::EmptyDataset);
    }
    if cols == 0 {
        return Err(Error::Degenerate("embedding dimension is zero".into()));
    }
    let count = rows.checked_mul(cols).ok_or(Error::Truncated {
        offset: cur.pos as u64,
        needed: u64::MAX,
        available: cur.remaining() as u64,
    })?;
    let payload = cur.take(count.saturating_mul(4))?;
    cur.expect_end()?;

    let mut data = Vec::with_capacity(count as usize);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4-byte chunk"));
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                offset: (EMBEDDING_HEADER + 4 * i) as u64,
            });
        }
        data.push(f64::from(v));
    }
    DenseMatrix::from_vec(rows as usize, cols as usize, data)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[u32]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_labels(labels)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_labels(&bytes)
}

pub fn encode_labels(labels: &[u32]) -> Result<Vec<u8>> {
    if labels.is_empty() {
        return Err(Error::EmptyLabels);
    }
    let mut out = Vec::with_capacity(LABEL_HEADER + 4 * labels.len());
    out.extend_from_slice(&LABEL_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(labels.len() as u64).to_le_bytes());
    for &l in labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_labels(bytes: &[u8]) -> Result<Vec<u32>> {
    let mut cur = Cursor::new(bytes);
    cur.expect_magic(LABEL_MAGIC)?;
    cur.expect_version()?;
    let count = cur.u64()?;
    if count == 0 {
        return Err(Error::EmptyLabels);
    }
    let payload = cur.take(count.saturating_mul(4))?;
    cur.expect_end()?;
    Ok(payload
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect())
}

/// Pairs a label vector with an embedding matrix, failing on a count mismatch.
pub fn check_paired(x: &EmbeddingMatrix, labels: &[u32]) -> Result<()> {
    if x.rows() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "embedding rows vs labels",
            left: x.rows(),
            right: labels.len(),
        });
    }
    Ok(())
}

/// One decimal cluster index per line, in input row order.
pub fn write_assignments(path: impl AsRef<Path>, assignments: &[usize]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for a in assignments {
        writeln!(w, "{a}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_assignments(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let v = trimmed.parse::<usize>().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{trimmed:?}: {e}"),
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

/// Writes one value per line, e.g. per-point diagnostics.
pub fn write_values(path: impl AsRef<Path>, values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in values {
        writeln!(w, "{v}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: u64) -> Result<&'a [u8]> {
        if n > self.remaining() as u64 {
            return Err(Error::Truncated {
                offset: self.pos as u64,
                needed: n,
                available: self.remaining() as u64,
            });
        }
        let n = n as usize;
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn expect_magic(&mut self, magic: [u8; 4]) -> Result<()> {
        let avail = &self.bytes[..self.bytes.len().min(4)];
        if avail != magic {
            return Err(Error::BadMagic {
                offset: 0,
                expected: magic,
                found: avail.to_vec(),
            });
        }
        self.pos = 4;
        Ok(())
    }

    fn expect_version(&mut self) -> Result<()> {
        let offset = self.pos as u64;
        let v = u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes"));
        if v != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion { offset, found: v });
        }
        Ok(())
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn expect_end(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::TrailingData {
                offset: self.pos as u64,
            });
        }
        Ok(())
    }
}
