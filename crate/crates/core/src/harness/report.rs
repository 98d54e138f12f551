use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ExperimentConfig, HarnessError, VERSION};
use crate::mc::RNG_ID;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub parameters: String,
    pub metric: String,
    pub value: f64,
    pub std_error: f64,
    pub tolerance: f64,
    /// Empty for purely informational rows.
    pub pass: Option<bool>,
    pub seed: u64,
    pub version: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub rng: String,
    pub rows: usize,
    pub unix_time: u64,
}

fn report_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Report(e.to_string())
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.serialize().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the rows with a header; an empty slice gives a header-only file.
pub fn write_csv(rows: &[ReportRow], path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(report_err)?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(report_err)?;
    w.write_record([
        "experiment",
        "parameters",
        "metric",
        "value",
        "std_error",
        "tolerance",
        "pass",
        "seed",
        "version",
        "note",
    ])
    .map_err(report_err)?;
    for row in rows {
        w.serialize(row).map_err(report_err)?;
    }
    w.flush().map_err(report_err)
}

/// `<csv>.meta.json` next to the report; the timestamp lives only here.
pub fn write_metadata(
    cfg: &ExperimentConfig,
    rows: usize,
    csv_path: &Path,
) -> Result<PathBuf, HarnessError> {
    let meta = RunMetadata {
        config_sha256: config_hash(cfg),
        seed: cfg.seed,
        version: VERSION.to_string(),
        rng: RNG_ID.to_string(),
        rows,
        unix_time: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta.json");
    let path = PathBuf::from(name);
    let text = serde_json::to_string_pretty(&meta).map_err(report_err)?;
    std::fs::write(&path, text).map_err(report_err)?;
    Ok(path)
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(report_err)?;
    r.deserialize().map(|row| row.map_err(report_err)).collect()
}
