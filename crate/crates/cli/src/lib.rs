//! Experiment harness for the dicut estimators: configuration, seeded
//! graph generation, the per-algorithm pipelines and report output.

pub mod config;
pub mod error;
pub mod report;
pub mod run;
pub mod seeds;

pub use config::{Algorithm, Cli, ExperimentConfig, Plan, Settings};
pub use error::CliError;
pub use report::{Report, Status};
pub use run::run_experiment;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Runs every config of `plan` on `plan.jobs` threads. Results keep the
/// order of `plan.configs`.
pub fn run_plan(plan: &Plan) -> Vec<Result<Report, CliError>> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<Report, CliError>>>> = plan.configs.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..plan.jobs.min(plan.configs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = plan.configs.get(i) else { break };
                let r = run_experiment(cfg);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every config ran"))
        .collect()
}
