//! Batch runner: strict config parsing, a dispatch table over the named
//! experiments, and CSV reports with a metadata sidecar.

mod config;
mod experiments;
mod report;

use std::path::PathBuf;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use experiments::run_experiment;
pub use report::{config_hash, read_csv, write_csv, write_metadata, ReportRow, RunMetadata};

pub const EXPERIMENTS: [&str; 18] = [
    "representation_residual",
    "ibp_pointwise",
    "lambda_closed_forms",
    "eta_check",
    "prop51_chain",
    "i1_closed_form",
    "i2_bound",
    "j_terms",
    "davie_probe",
    "girsanov",
    "exp_moment",
    "series_half_factorial",
    "flow_derivative",
    "duhamel",
    "gradient_norm",
    "sobolev_uniformity",
    "time_continuity",
    "lambda_rate",
];

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },

    #[error("line {line}: unknown section `[{name}]`")]
    UnknownSection { name: String, line: usize },

    #[error("invalid configuration: {0}")]
    Constraint(String),

    #[error("unknown experiment `{name}`; available: {available}")]
    UnknownExperiment { name: String, available: String },

    #[error("no experiment given")]
    MissingExperiment,

    #[error("report error: {0}")]
    Report(String),
}

pub(crate) fn experiment_index(name: &str) -> Result<usize, HarnessError> {
    EXPERIMENTS
        .iter()
        .position(|e| *e == name)
        .ok_or_else(|| HarnessError::UnknownExperiment {
            name: name.to_string(),
            available: EXPERIMENTS.join(", "),
        })
}
