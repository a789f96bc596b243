//! Line-delimited files: one header object, then one record per line.

use std::fs;
use std::path::Path;

use n2f_core::config::{hash_bytes, RunConfig};
use n2f_core::metrics::Mode;
use n2f_core::task::Setting;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Lineage carried by every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: String,
    pub config_hash: String,
    /// Hash of the corpus records the file derives from.
    pub corpus_hash: String,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setting: Option<Setting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl Header {
    pub fn new(kind: &str, config: &RunConfig, corpus_hash: &str) -> Header {
        Header {
            kind: kind.to_string(),
            config_hash: config.hash(),
            corpus_hash: corpus_hash.to_string(),
            config: config.clone(),
            mode: None,
            setting: None,
            model: None,
        }
    }
}

/// Serialized record lines, each without a trailing newline.
pub fn record_lines<T: Serialize>(records: &[T]) -> Result<Vec<String>, Failure> {
    records
        .iter()
        .map(|r| serde_json::to_string(r).map_err(Failure::from))
        .collect()
}

/// Hash of record lines joined by newlines.
pub fn lines_hash(lines: &[String]) -> String {
    hash_bytes(lines.join("\n").as_bytes())
}

pub fn write_lines(path: &Path, header: &Header, lines: &[String]) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    let mut text = serde_json::to_string(header)?;
    text.push('\n');
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

pub fn write_records<T: Serialize>(path: &Path, header: &Header, records: &[T]) -> Result<(), Failure> {
    write_lines(path, header, &record_lines(records)?)
}

/// Reads a file written by `write_lines`, checking its kind. Also returns the
/// raw record lines so callers can hash them.
pub fn read_records<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<(Header, Vec<T>, Vec<String>), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut lines = text.lines();
    let first = lines
        .next()
        .ok_or_else(|| Failure::validation(format!("{}: empty file", path.display())))?;
    let header: Header = serde_json::from_str(first)
        .map_err(|e| Failure::validation(format!("{}: bad header: {e}", path.display())))?;
    if header.kind != kind {
        return Err(Failure::validation(format!(
            "{}: expected a {kind} file, found {}",
            path.display(),
            header.kind
        )));
    }
    let raw: Vec<String> = lines.map(str::to_string).collect();
    let records = raw
        .iter()
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Failure::validation(format!("{} line {}: {e}", path.display(), i + 2)))
        })
        .collect::<Result<Vec<T>, Failure>>()?;
    Ok((header, records, raw))
}
