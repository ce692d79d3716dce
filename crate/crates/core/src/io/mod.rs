//! File formats: an ENVI reader, the portable cube container, P5 masks and
//! score-map exports. Every writer goes through a temp file and an atomic
//! rename, so a failed write never leaves a partial file behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::types::TypeError;

pub mod envi;
pub mod pgm;
pub mod portable;
pub mod scoremap;

pub use envi::{read_envi, read_envi_header, ByteOrder, DataType, EnviHeader, Interleave};
pub use pgm::{read_mask, read_pgm_mask, write_mask, write_pgm_mask};
pub use portable::{read_cube, write_cube};
pub use scoremap::{read_scoremap, write_scoremap, ScoreFormat};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error at line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: unsupported {name} = {value}")]
    UnsupportedField { path: PathBuf, name: String, value: String },
    #[error("{path}: expected {expected} bytes, found {got}")]
    SizeMismatch { path: PathBuf, expected: u64, got: u64 },
    #[error(transparent)]
    Type(#[from] TypeError),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn unsupported(path: &Path, name: &str, value: impl ToString) -> Self {
        IoError::UnsupportedField {
            path: path.to_path_buf(),
            name: name.to_string(),
            value: value.to_string(),
        }
    }

    pub(crate) fn json(path: &Path, e: serde_json::Error) -> Self {
        Self::parse(path, e.line(), e.to_string())
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|e| IoError::io(path, e))
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| IoError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

/// `path` with `suffix` appended to its file name (`a.pgm` -> `a.pgm.json`).
pub(crate) fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}
