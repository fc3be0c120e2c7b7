use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix data length {len} does not match {rows}x{cols}")]
    DataLength {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic at byte offset {offset}: expected {expected:?}, found {found:?}")]
    BadMagic {
        offset: u64,
        expected: [u8; 4],
        found: Vec<u8>,
    },

    #[error("unsupported format version {found} at byte offset {offset}")]
    UnsupportedVersion { offset: u64, found: u32 },

    #[error("truncated file: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: u64,
        needed: u64,
        available: u64,
    },

    #[error("non-finite float at byte offset {offset}")]
    NonFiniteValue { offset: u64 },

    #[error("trailing data after payload at byte offset {offset}")]
    TrailingData { offset: u64 },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty labels")]
    EmptyLabels,

    #[error("csv line {line}: {message}")]
    Csv { line: usize, message: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unlabeled sentinel at index {index}")]
    SentinelLabel { index: usize },

    #[error("cluster center {index} has zero norm")]
    ZeroNormCenter { index: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("failed to serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
