//! Report serialization: sorted-key JSON, CSV, the non-finite guard and the run manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Fails on any `null`, which is how serde_json writes NaN and infinities.
/// Report types omit absent optionals, so a `null` can only be a bad number.
pub fn guard_finite(value: &Value, path: &str) -> Result<(), CliError> {
    match value {
        Value::Null => Err(CliError::Numerical(format!("non-finite value at {path}"))),
        Value::Number(n) if n.as_f64().is_some_and(|v| !v.is_finite()) => {
            Err(CliError::Numerical(format!("non-finite value at {path}")))
        }
        Value::Array(items) => items
            .iter()
            .enumerate()
            .try_for_each(|(i, v)| guard_finite(v, &format!("{path}[{i}]"))),
        Value::Object(map) => map.iter().try_for_each(|(k, v)| guard_finite(v, &format!("{path}.{k}"))),
        _ => Ok(()),
    }
}

/// Pretty JSON with object keys in sorted order.
pub fn to_sorted_json<S: Serialize>(payload: &S) -> Result<String, CliError> {
    let value = serde_json::to_value(payload).map_err(|e| CliError::Numerical(e.to_string()))?;
    guard_finite(&value, "$")?;
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    Ok(text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

pub fn write_json<S: Serialize>(path: &Path, payload: &S) -> Result<(), CliError> {
    write_text(path, &to_sorted_json(payload)?)
}

/// A CSV table of already-formatted cells.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io("csv buffer", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv cells are utf-8"))
    }
}

/// Formats a number for CSV; non-finite values trip the guard.
pub fn num(v: f64) -> Result<String, CliError> {
    if v.is_finite() {
        Ok(format!("{v}"))
    } else {
        Err(CliError::Numerical(format!("non-finite value {v} in table")))
    }
}

pub fn opt_num(v: Option<f64>) -> Result<String, CliError> {
    v.map(num).transpose().map(Option::unwrap_or_default)
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub wall_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub stages: Vec<Stage>,
    pub outputs: Vec<PathBuf>,
}
