//! Newline-delimited JSON helpers shared by every on-disk record format.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parses every non-blank line of `path`, passing its 1-based line number along.
pub fn read_lines<T, F>(path: &Path, mut each: F) -> Result<()>
where
    T: DeserializeOwned,
    F: FnMut(usize, T) -> Result<()>,
{
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        each(idx + 1, value)?;
    }
    Ok(())
}

pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    read_lines(path, |_, v| {
        out.push(v);
        Ok(())
    })?;
    Ok(out)
}

pub fn to_line<T: Serialize>(value: &T) -> String {
    // Serialization of plain data types cannot fail.
    serde_json::to_string(value).expect("record serializes")
}

pub fn write_all<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut buf = String::new();
    for v in values {
        buf.push_str(&to_line(v));
        buf.push('\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn append<T: Serialize>(path: &Path, values: &[T]) -> Result<()> {
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    for v in values {
        writeln!(file, "{}", to_line(v)).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
