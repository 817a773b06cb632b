use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use rec_core::model::ContextDocument;
use rec_core::schema::{read_jsonl, serialize_canonical, LinePolicy};

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    read_jsonl(path, LinePolicy::Abort)
        .map(|r| r.records)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Context documents from a JSON array or JSONL.
pub fn read_contexts(path: &Path) -> CliResult<Vec<ContextDocument>> {
    let raw = read_text(path)?;
    if raw.trim_start().starts_with('[') {
        serde_json::from_str(&raw).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    } else {
        read_rows(path)
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", serialize_canonical(value).as_str())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

/// Canonical JSON on stdout.
pub fn print_json<T: Serialize>(value: &T) {
    println!("{}", serialize_canonical(value).as_str());
}

pub fn write_lines<T: Serialize>(path: &Path, rows: &[T], trailer: Option<&serde_json::Value>) -> CliResult<()> {
    let mut w = create(path)?;
    let fail = |e: std::io::Error| CliError::internal(format!("{}: {e}", path.display()));
    for r in rows {
        writeln!(w, "{}", serialize_canonical(r).as_str()).map_err(fail)?;
    }
    if let Some(t) = trailer {
        writeln!(w, "{}", serialize_canonical(t).as_str()).map_err(fail)?;
    }
    w.flush().map_err(fail)
}
