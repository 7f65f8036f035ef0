//! Report types and their JSON and CSV output.

use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// JSON schema every report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    /// The estimator ran within its budget and reported failure.
    EstimatorFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: u64,
    pub max_degree: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Oracle {
    /// Exact value as `p/q`.
    pub maxval: String,
    pub maxval_f64: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub graph: GraphSummary,
    pub status: Status,
    pub error: Option<String>,
    /// Headline estimate of the maximum dicut value.
    pub value: Option<f64>,
    /// Guaranteed lower bound for single-pass pipelines (`value - eps`).
    pub lower_bound: Option<f64>,
    pub oracle: Option<Oracle>,
    pub ratio: Option<f64>,
    /// Total variation between the estimated and the true type distribution.
    pub tv_to_oracle: Option<f64>,
    pub passes_used: usize,
    pub peak_words: usize,
    /// Algorithm-specific details.
    pub output: serde_json::Value,
    pub wall_time_ms: f64,
}

impl Report {
    pub fn file_name(&self) -> String {
        format!("{}-seed{}.json", self.config.algorithm.name(), self.config.seed)
    }

    /// Writes `<out>/<algo>-seed<seed>.json` and returns its path.
    pub fn write_json(&self, out: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let path = out.join(self.file_name());
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn summary_row(&self) -> SummaryRow {
        SummaryRow {
            algorithm: self.config.algorithm.name(),
            graph: self.config.graph.clone(),
            seed: self.config.seed,
            n: self.graph.n,
            m: self.graph.m,
            status: self.status,
            value: self.value,
            lower_bound: self.lower_bound,
            maxval: self.oracle.as_ref().map(|o| o.maxval_f64),
            ratio: self.ratio,
            tv_to_oracle: self.tv_to_oracle,
            passes_used: self.passes_used,
            peak_words: self.peak_words,
            wall_time_ms: self.wall_time_ms,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SummaryRow {
    pub algorithm: &'static str,
    pub graph: String,
    pub seed: u64,
    pub n: usize,
    pub m: u64,
    pub status: Status,
    pub value: Option<f64>,
    pub lower_bound: Option<f64>,
    pub maxval: Option<f64>,
    pub ratio: Option<f64>,
    pub tv_to_oracle: Option<f64>,
    pub passes_used: usize,
    pub peak_words: usize,
    pub wall_time_ms: f64,
}

/// Appends rows to `<out>/summary.csv`, writing the header for a new file.
pub fn append_summary(out: &Path, reports: &[Report]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join(SUMMARY_FILE);
    let fresh = std::fs::metadata(&path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| CliError::io(&path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in reports {
        w.serialize(r.summary_row())?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
