use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dicut_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse config {}: {source}", path.display())]
    Config { path: PathBuf, source: toml::de::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

/// Estimator errors that are an in-budget failure of the algorithm rather
/// than a problem with the input or environment.
pub fn is_estimator_failure(e: &dicut_core::Error) -> bool {
    use dicut_core::Error::*;
    matches!(e, InsufficientCoverage(_) | PassCapExceeded(_) | CapExceeded { .. } | ZeroMass)
}
