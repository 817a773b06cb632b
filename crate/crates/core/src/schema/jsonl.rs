//! Line-delimited JSON records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::serialize_canonical;

/// What to do with a line that fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinePolicy {
    #[default]
    Abort,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {}: {}", .0.line, .0.message)]
    BadLine(LineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JsonlRead<T> {
    pub records: Vec<T>,
    pub errors: Vec<LineError>,
}

/// Reads records from any buffered reader. Blank lines are ignored.
pub fn read_records<T: DeserializeOwned, R: BufRead>(
    reader: R,
    policy: LinePolicy,
) -> Result<JsonlRead<T>, JsonlError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| JsonlError::Io {
            path: "<reader>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(r) => records.push(r),
            Err(e) => {
                let err = LineError {
                    line: idx + 1,
                    message: e.to_string(),
                };
                match policy {
                    LinePolicy::Abort => return Err(JsonlError::BadLine(err)),
                    LinePolicy::Skip => errors.push(err),
                }
            }
        }
    }
    Ok(JsonlRead { records, errors })
}

pub fn read_jsonl<T: DeserializeOwned>(
    path: impl AsRef<Path>,
    policy: LinePolicy,
) -> Result<JsonlRead<T>, JsonlError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_records(BufReader::new(file), policy)
}

/// Writes one canonical JSON record per line.
pub fn write_records<T: Serialize, W: Write>(mut writer: W, records: &[T]) -> std::io::Result<()> {
    for r in records {
        writer.write_all(serialize_canonical(r).as_str().as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<(), JsonlError> {
    let path = path.as_ref();
    let io_err = |source| JsonlError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_records(BufWriter::new(file), records).map_err(io_err)
}
