//! Result emission: pretty JSON or flat CSV, to stdout or a file.
//!
//! The CSV view of a result is its rows: a top-level array, or the `trials`
//! array of an experiment, or a single record for scalar reports. Nested
//! objects flatten into dotted columns; arrays of scalars join with spaces;
//! missing values are empty cells. Column order is the (sorted) JSON key
//! order, so sets are stable across runs.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Output encoding selected by `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Pretty-printed JSON.
    Json,
    /// Flat rows; see the module docs for the flattening rules.
    Csv,
}

/// Renders `value` in the requested format.
pub fn render<T: Serialize>(value: &T, format: Format) -> Result<String> {
    let value = serde_json::to_value(value).context("serializing result")?;
    match format {
        Format::Json => Ok(format!("{}\n", serde_json::to_string_pretty(&value)?)),
        Format::Csv => to_csv(&value),
    }
}

/// Writes rendered output to `out`, or stdout when absent.
pub fn emit<T: Serialize>(value: &T, format: Format, out: Option<&Path>) -> Result<()> {
    let text = render(value, format)?;
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).context("writing stdout")
        }
    }
}

/// The row set a value flattens to.
fn rows_of(value: &Value) -> Vec<&Value> {
    match value {
        Value::Array(items) => items.iter().collect(),
        Value::Object(map) => match map.get("trials") {
            Some(Value::Array(items)) => items.iter().collect(),
            _ => vec![value],
        },
        _ => vec![value],
    }
}

fn to_csv(value: &Value) -> Result<String> {
    let rows = rows_of(value);
    let mut flat_rows = Vec::with_capacity(rows.len());
    let mut columns: Vec<String> = Vec::new();
    for row in rows {
        let mut flat = Vec::new();
        flatten("", row, &mut flat);
        for (key, _) in &flat {
            if !columns.contains(key) {
                columns.push(key.clone());
            }
        }
        flat_rows.push(flat);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&columns)?;
    for flat in flat_rows {
        let record: Vec<String> = columns
            .iter()
            .map(|c| {
                flat.iter()
                    .find(|(k, _)| k == c)
                    .map(|(_, v)| v.clone())
                    .unwrap_or_default()
            })
            .collect();
        w.write_record(&record)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        Value::Array(items) => {
            let joined = items.iter().map(scalar_text).collect::<Vec<_>>().join(" ");
            out.push((prefix.to_string(), joined));
        }
        other => out.push((prefix.to_string(), scalar_text(other))),
    }
}

fn scalar_text(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
