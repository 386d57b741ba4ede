//! Artifact reading and writing: pretty JSON documents and two-column
//! label CSVs.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes `sample_id,label` rows.
pub fn write_label_csv(path: &Path, ids: &[String], labels: &[String]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    writer.write_record(["sample_id", "label"])?;
    for (id, label) in ids.iter().zip(labels.iter()) {
        writer.write_record([id, label])?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads `sample_id,label` rows.
pub fn read_label_csv(path: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 2 {
            bail!(
                "{}: expected 2 columns (sample_id, label), found {}",
                path.display(),
                record.len()
            );
        }
        ids.push(record[0].to_string());
        labels.push(record[1].to_string());
    }
    Ok((ids, labels))
}
