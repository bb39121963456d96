use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::{display, extension, ExperimentConfig};
use crate::{CliError, Format};

/// One condition's output in both formats.
pub struct Rendered {
    pub label: String,
    pub csv: Vec<u8>,
    pub json: serde_json::Value,
}

impl Rendered {
    pub fn new<F>(label: &str, json: serde_json::Value, csv: F) -> Result<Self, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> csv::Result<()>,
    {
        let mut buf = Vec::new();
        csv(&mut buf).map_err(|e| CliError::Experiment(format!("csv encoding failed: {e}")))?;
        Ok(Self {
            label: label.to_owned(),
            csv: buf,
            json,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("report types serialize")
}

fn pretty(value: &serde_json::Value) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("json values serialize");
    v.push(b'\n');
    v
}

/// Prefixes every CSV row with the condition label.
fn with_condition_column(label: &str, csv_bytes: &[u8], header: bool, out: &mut Vec<u8>) {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(csv_bytes);
    let mut w = csv::WriterBuilder::new().from_writer(out);
    for (i, rec) in r.records().enumerate() {
        let rec = rec.expect("csv produced by this program");
        if i == 0 && !header {
            continue;
        }
        let first = if i == 0 { "condition" } else { label };
        let row: Vec<&str> = std::iter::once(first).chain(rec.iter()).collect();
        w.write_record(&row).expect("in-memory csv write");
    }
    w.flush().expect("in-memory csv flush");
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(display(path), e))
}

/// Writes the rendered conditions.
///
/// Without `--out`, everything goes to stdout: one JSON document (an array
/// when there are several conditions) or one CSV with a leading `condition`
/// column when there are several conditions. With `--out`, a single condition
/// outside a preset is written to that file; otherwise `--out` is a
/// directory receiving `<label>.<ext>` per condition plus `manifest.json`.
pub fn emit(
    items: &[Rendered],
    configs: &[ExperimentConfig],
    out: Option<&Path>,
    format: Format,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let single = items.len() == 1 && configs.first().is_none_or(|c| c.preset.is_none());
    let bytes_of = |r: &Rendered| match format {
        Format::Csv => r.csv.clone(),
        Format::Json => pretty(&r.json),
    };
    match out {
        None => {
            let bytes = if single {
                bytes_of(&items[0])
            } else {
                match format {
                    Format::Json => pretty(&serde_json::Value::Array(
                        items.iter().map(|r| r.json.clone()).collect(),
                    )),
                    Format::Csv => {
                        let mut buf = Vec::new();
                        for (i, r) in items.iter().enumerate() {
                            with_condition_column(&r.label, &r.csv, i == 0, &mut buf);
                        }
                        buf
                    }
                }
            };
            stdout
                .write_all(&bytes)
                .map_err(|e| CliError::io("<stdout>", e))
        }
        Some(path) if single => write_file(path, &bytes_of(&items[0])),
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(display(dir), e))?;
            for r in items {
                let name = format!("{}.{}", r.label, extension(format));
                write_file(&dir.join(name), &bytes_of(r))?;
            }
            let manifest = serde_json::json!({
                "conditions": configs,
                "files": items
                    .iter()
                    .map(|r| format!("{}.{}", r.label, extension(format)))
                    .collect::<Vec<_>>(),
            });
            write_file(&dir.join("manifest.json"), &pretty(&manifest))
        }
    }
}
