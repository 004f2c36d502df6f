//! Atomic file output and small formatting helpers.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::CliError;

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::from(e.error))?;
    Ok(())
}

/// Collects output files for one command run.
#[derive(Debug, Default)]
pub struct Outputs {
    pub paths: Vec<PathBuf>,
}

impl Outputs {
    pub fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&path, bytes)?;
        self.paths.push(path);
        Ok(())
    }
}

/// A CSV table with `#` comment lines above the header.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(comments: &[(&str, String)], header: &[&str]) -> Self {
        let mut text = String::new();
        for (k, v) in comments {
            writeln!(text, "# {k}: {v}").unwrap();
        }
        writeln!(text, "{}", header.join(",")).unwrap();
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        let quoted: Vec<String> = cells.iter().map(|c| quote(c)).collect();
        writeln!(self.text, "{}", quoted.join(",")).unwrap();
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// File-name-safe rendering of a song key or other label.
pub fn slug(text: &str) -> String {
    let mut out = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    let out = out.trim_matches('-').to_string();
    if out.is_empty() {
        "song".to_string()
    } else {
        out
    }
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}
