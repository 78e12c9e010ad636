use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CuhError>;

#[derive(Debug, Error)]
pub enum CuhError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("bad magic in {path}: expected {expected:?}, found {found:?}")]
    BadMagic {
        path: String,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("unsupported format version {found} in {path} (supported: {supported})")]
    UnsupportedVersion {
        path: String,
        found: u32,
        supported: u32,
    },

    #[error("payload size mismatch in {path}: header implies {expected} bytes, found {actual}")]
    PayloadSize {
        path: String,
        expected: u64,
        actual: u64,
    },

    #[error("item count mismatch between views: view 1 has {view1} items, view 2 has {view2}")]
    ItemCountMismatch { view1: usize, view2: usize },

    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: String, reason: String },

    #[error("parse error in {path} at row {row}, column {col}: {reason}")]
    Parse {
        path: String,
        row: usize,
        col: usize,
        reason: String,
    },

    #[error("ragged row in {path} at row {row}: expected {expected} columns, found {found}")]
    Ragged {
        path: String,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CuhError {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        CuhError::Dimension {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        CuhError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
