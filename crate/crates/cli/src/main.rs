use std::process::ExitCode;

use clap::Parser;
use dicut_cli::report::{append_summary, REPORT_SCHEMA};
use dicut_cli::{run_plan, Cli, Report, Status};

/// Exit status for an estimator that ran and reported failure.
const ESTIMATOR_FAILURE: u8 = 2;

fn describe(r: &Report) -> String {
    let mut s = format!("{} seed {}: ", r.config.algorithm.name(), r.config.seed);
    match (r.status, r.value) {
        (Status::Ok, Some(v)) => s += &format!("value {v:.6}"),
        _ => s += &format!("estimator failure ({})", r.error.as_deref().unwrap_or("no output")),
    }
    if let Some(lb) = r.lower_bound {
        s += &format!(", lower bound {lb:.6}");
    }
    if let Some(o) = &r.oracle {
        s += &format!(", maxval {}", o.maxval);
    }
    if let Some(ratio) = r.ratio {
        s += &format!(", ratio {ratio:.4}");
    }
    if let Some(tv) = r.tv_to_oracle {
        s += &format!(", TV {tv:.4}");
    }
    s + &format!(", {} passes, {} peak words", r.passes_used, r.peak_words)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_schema {
        print!("{REPORT_SCHEMA}");
        return ExitCode::SUCCESS;
    }
    let plan = match cli.plan() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut reports = Vec::new();
    let mut infra = false;
    for (cfg, result) in plan.configs.iter().zip(run_plan(&plan)) {
        match result {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("error: {} seed {}: {e}", cfg.algorithm.name(), cfg.seed);
                infra = true;
            }
        }
    }
    for r in &reports {
        match r.write_json(&plan.out_dir) {
            Ok(path) => println!("{} -> {}", describe(r), path.display()),
            Err(e) => {
                eprintln!("error: {e}");
                infra = true;
            }
        }
    }
    if !reports.is_empty() {
        if let Err(e) = append_summary(&plan.out_dir, &reports) {
            eprintln!("error: {e}");
            infra = true;
        }
    }
    if infra {
        ExitCode::FAILURE
    } else if reports.iter().any(|r| r.status == Status::EstimatorFailure) {
        ExitCode::from(ESTIMATOR_FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}
