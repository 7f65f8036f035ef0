//! Command-line flags, the TOML config file and the resolved experiment
//! configuration.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use dicut_core::generate::GraphSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DICUT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "dicut-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    ExactOracle,
    LocalPos,
    LocalMapExpectation,
    AdvStream,
    RandStream,
    Multipass,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ExactOracle => "exact-oracle",
            Algorithm::LocalPos => "local-pos",
            Algorithm::LocalMapExpectation => "local-map-expectation",
            Algorithm::AdvStream => "adv-stream",
            Algorithm::RandStream => "rand-stream",
            Algorithm::Multipass => "multipass",
        }
    }
}

/// Parameters shared by the flags and the config file. Every field is
/// optional so the two sources can be layered.
#[derive(Debug, Clone, Default, PartialEq, clap::Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    #[arg(long, value_enum)]
    pub algo: Option<Algorithm>,
    /// Graph file: a header line `n m` followed by `u v` edge lines.
    #[arg(long, conflicts_with = "gen")]
    pub graph: Option<PathBuf>,
    /// Generator, e.g. `random-d-regular:n=100,d=3`.
    #[arg(long)]
    pub gen: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Maximum degree bound D; defaults to the graph's maximum degree.
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub ell: Option<u32>,
    /// Number of colors k.
    #[arg(long)]
    pub colors: Option<u32>,
    #[arg(long)]
    pub dsamp: Option<usize>,
    /// Neighbor samples per multipass task and direction.
    #[arg(long)]
    pub dinner: Option<usize>,
    #[arg(long)]
    pub tsamples: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Largest number of non-isolated vertices handed to the exact oracle.
    #[arg(long)]
    pub oracle_cap: Option<usize>,
    /// Largest multipass task tree.
    #[arg(long)]
    pub task_cap: Option<usize>,
    /// Number of consecutive seeds to run.
    #[arg(long)]
    pub runs: Option<u64>,
    /// Worker threads for multi-seed runs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory for reports and the CSV summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Settings {
    /// Fields set in `self` win over `other`.
    pub fn or(self, other: Settings) -> Settings {
        Settings {
            algo: self.algo.or(other.algo),
            graph: self.graph.or(other.graph),
            gen: self.gen.or(other.gen),
            seed: self.seed.or(other.seed),
            eps: self.eps.or(other.eps),
            delta: self.delta.or(other.delta),
            degree: self.degree.or(other.degree),
            ell: self.ell.or(other.ell),
            colors: self.colors.or(other.colors),
            dsamp: self.dsamp.or(other.dsamp),
            dinner: self.dinner.or(other.dinner),
            tsamples: self.tsamples.or(other.tsamples),
            alpha: self.alpha.or(other.alpha),
            oracle_cap: self.oracle_cap.or(other.oracle_cap),
            task_cap: self.task_cap.or(other.task_cap),
            runs: self.runs.or(other.runs),
            jobs: self.jobs.or(other.jobs),
            out: self.out.or(other.out),
        }
    }

    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s: Settings = toml::from_str(&text).map_err(|source| CliError::Config {
            path: path.to_path_buf(),
            source,
        })?;
        // relative graph paths are read relative to the config file
        if let (Some(g), Some(dir)) = (&s.graph, path.parent()) {
            if g.is_relative() {
                s.graph = Some(dir.join(g));
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Parser)]
#[command(name = "dicut", version, about = "Run max-dicut estimators on generated or loaded graphs")]
pub struct Cli {
    /// TOML file with the same keys as the flags (`algo = "multipass"`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the report JSON schema and exit.
    #[arg(long)]
    pub print_schema: bool,
    #[command(flatten)]
    pub settings: Settings,
}

/// A fully resolved run. Serialized into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub graph: String,
    pub seed: u64,
    pub eps: f64,
    pub delta: f64,
    pub degree: Option<u32>,
    pub ell: Option<u32>,
    pub colors: Option<u32>,
    pub d_samp: usize,
    pub d_inner: usize,
    pub t_samples: usize,
    pub alpha: Option<f64>,
    pub oracle_cap: usize,
    pub task_cap: usize,
}

/// Resolved invocation: one config per seed plus where to write.
#[derive(Debug, Clone)]
pub struct Plan {
    pub configs: Vec<ExperimentConfig>,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

pub const DEFAULT_EPS: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_D_SAMP: usize = 200;
pub const DEFAULT_D_INNER: usize = 4;
pub const DEFAULT_T_SAMPLES: usize = 2000;
pub const DEFAULT_ORACLE_CAP: usize = 20;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl ExperimentConfig {
    /// Per-algorithm checks, run before any graph is built.
    pub fn validate(&self) -> Result<(), CliError> {
        GraphSpec::parse(&self.graph)?;
        let single_pass = matches!(self.algorithm, Algorithm::AdvStream | Algorithm::RandStream);
        if (single_pass || self.algorithm == Algorithm::Multipass) && !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.algorithm == Algorithm::AdvStream && !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(a) = self.alpha {
            if !(0.0..1.0).contains(&a) {
                return Err(invalid(format!("alpha must lie in [0, 1), got {a}")));
            }
        }
        if let Some(k) = self.colors {
            if k < 2 {
                return Err(invalid("need at least two colors"));
            }
        }
        if self.degree == Some(0) {
            return Err(invalid("degree bound must be positive"));
        }
        match self.algorithm {
            Algorithm::RandStream | Algorithm::LocalMapExpectation if self.ell == Some(0) => {
                return Err(invalid("ell must be at least 1"));
            }
            Algorithm::RandStream if self.t_samples == 0 => return Err(invalid("tsamples must be positive")),
            Algorithm::Multipass if self.d_samp == 0 || self.d_inner == 0 => {
                return Err(invalid("dsamp and dinner must be positive"))
            }
            _ => {}
        }
        Ok(())
    }
}

impl Cli {
    /// Layers flags over the config file over defaults.
    pub fn plan(&self) -> Result<Plan, CliError> {
        let file = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        resolve(self.settings.clone().or(file), std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
    }
}

pub fn resolve(s: Settings, env_out: Option<PathBuf>) -> Result<Plan, CliError> {
    let algorithm = s.algo.ok_or_else(|| invalid("--algo is required"))?;
    let graph = match (&s.graph, &s.gen) {
        (Some(path), None) => GraphSpec::File(path.clone()).to_string(),
        (None, Some(g)) => GraphSpec::parse(g)?.to_string(),
        (Some(_), Some(_)) => return Err(invalid("give either --graph or --gen, not both")),
        (None, None) => return Err(invalid("one of --graph or --gen is required")),
    };
    let seed = s.seed.unwrap_or(0);
    let runs = s.runs.unwrap_or(1);
    if runs == 0 {
        return Err(invalid("runs must be positive"));
    }
    let base = ExperimentConfig {
        algorithm,
        graph,
        seed,
        eps: s.eps.unwrap_or(DEFAULT_EPS),
        delta: s.delta.unwrap_or(DEFAULT_DELTA),
        degree: s.degree,
        ell: s.ell,
        colors: s.colors,
        d_samp: s.dsamp.unwrap_or(DEFAULT_D_SAMP),
        d_inner: s.dinner.unwrap_or(DEFAULT_D_INNER),
        t_samples: s.tsamples.unwrap_or(DEFAULT_T_SAMPLES),
        alpha: s.alpha,
        oracle_cap: s.oracle_cap.unwrap_or(DEFAULT_ORACLE_CAP),
        task_cap: s.task_cap.unwrap_or(dicut_core::multipass::DEFAULT_TASK_CAP),
    };
    base.validate()?;
    let configs = (0..runs)
        .map(|i| ExperimentConfig {
            seed: seed.wrapping_add(i),
            ..base.clone()
        })
        .collect();
    Ok(Plan {
        configs,
        out_dir: s.out.or(env_out).unwrap_or_else(|| DEFAULT_OUT_DIR.into()),
        jobs: s.jobs.unwrap_or(1).max(1),
    })
}
