//! Newline-delimited dataset I/O: audit records, ground-truth sidecars,
//! rule-set files, and the columnar PDS intermediate format.

use crate::record::{AuditRecord, DefensibilityLevel, InverseCheck, RuleSet};
use crate::simulator::CaseTruth;
use serde::Deserialize;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("IO_FAILURE: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("duplicate record id `{0}`")]
    DuplicateId(String),
}

/// One row of the columnar extracted-PDS intermediate format: raw
/// components, the MAP level (xi_star), the stated level and inverse
/// check, the collapsed scalar, and an optional outcome label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdsRow {
    pub id: String,
    pub cohort: String,
    pub lambda_xi: Option<f64>,
    pub h_kappa: Option<f64>,
    pub h_w: Option<f64>,
    pub sigma_rho: Option<f64>,
    pub xi_star: Option<DefensibilityLevel>,
    pub level: DefensibilityLevel,
    pub inverse_check: InverseCheck,
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<bool>,
}

/// Reads any JSONL file of one serializable item per line.
pub fn read_items<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    read_jsonl(path)
}

/// Writes any items as JSONL, atomically (temp + rename).
pub fn write_items<T: Serialize>(items: &[T], path: &Path) -> Result<(), DatasetError> {
    write_jsonl(items, path)
}

/// Writes a single pretty-printed JSON document atomically.
pub fn write_json_pretty<T: Serialize>(value: &T, path: &Path) -> Result<(), DatasetError> {
    let tmp = path.with_extension("tmp");
    let text = serde_json::to_string_pretty(value).expect("serializable value");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item =
            serde_json::from_str(&line).map_err(|e| DatasetError::Parse { line: i + 1, source: e })?;
        out.push(item);
    }
    Ok(out)
}

/// Writes items as one JSON object per line, atomically (temp + rename).
fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<(), DatasetError> {
    let tmp = path.with_extension("tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        for item in items {
            let line = serde_json::to_string(item).expect("serializable item");
            writeln!(file, "{line}")?;
        }
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Reads an audit dataset and enforces id uniqueness.
pub fn read_records(path: &Path) -> Result<Vec<AuditRecord>, DatasetError> {
    let records: Vec<AuditRecord> = read_jsonl(path)?;
    let mut seen = BTreeSet::new();
    for r in &records {
        if !seen.insert(r.id.clone()) {
            return Err(DatasetError::DuplicateId(r.id.clone()));
        }
    }
    Ok(records)
}

pub fn write_records(records: &[AuditRecord], path: &Path) -> Result<(), DatasetError> {
    write_jsonl(records, path)
}

pub fn read_truths(path: &Path) -> Result<Vec<CaseTruth>, DatasetError> {
    read_jsonl(path)
}

pub fn write_truths(truths: &[CaseTruth], path: &Path) -> Result<(), DatasetError> {
    write_jsonl(truths, path)
}

/// Rule sets load from a JSON array or JSONL file of RuleSet objects.
pub fn read_rule_sets(path: &Path) -> Result<Vec<RuleSet>, DatasetError> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| DatasetError::Parse { line: 1, source: e })
    } else {
        read_jsonl(path)
    }
}

pub fn write_rule_sets(rule_sets: &[RuleSet], path: &Path) -> Result<(), DatasetError> {
    write_jsonl(rule_sets, path)
}
