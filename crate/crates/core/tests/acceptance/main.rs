//! Acceptance checks, one line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`. A FAIL line does
//! not change the exit status unless `ACCEPTANCE_STRICT` is set; an error or
//! panic inside a check always does.

mod exact;
mod oracles;
mod sampling;
mod streams;
mod support;
mod types;

use std::process::ExitCode;
use std::time::Instant;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

pub type CheckResult = Result<Outcome, Box<dyn std::error::Error>>;

const CHECKS: [(u32, &str, fn() -> CheckResult); 12] = [
    (1, "half-approximation of pos", exact::half_approximation),
    (2, "local map expectation", exact::local_expectation),
    (3, "canonical form vs brute-force isomorphism", types::canonical_form),
    (4, "adversarial-order estimator", streams::adversarial),
    (5, "degree-matching rejection", types::degree_matching),
    (6, "visible-type oracle", oracles::visdist),
    (7, "mixing inversion", oracles::mixing_inversion),
    (8, "random-order estimator", streams::random_order),
    (9, "multipass estimator", streams::multipass),
    (10, "PosEst concentration", sampling::pos_est_concentration),
    (11, "reservoir and hash uniformity", sampling::uniformity),
    (12, "coloring filter", sampling::coloring_filter),
];

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let strict = std::env::var_os("ACCEPTANCE_STRICT").is_some();
    let (mut passed, mut failed, mut errors) = (0, 0, 0);
    for (id, name, check) in CHECKS {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check);
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(Ok(o)) => {
                let tag = if o.pass { "PASS" } else { "FAIL" };
                if o.pass {
                    passed += 1;
                } else {
                    failed += 1;
                }
                println!("criterion {id:>2} {tag} {name}: {} [{secs:.1}s]", o.detail);
            }
            Ok(Err(e)) => {
                errors += 1;
                println!("criterion {id:>2} ERROR {name}: {e} [{secs:.1}s]");
            }
            Err(_) => {
                errors += 1;
                println!("criterion {id:>2} ERROR {name}: panicked [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {passed} passed, {failed} failed, {errors} errors");
    if errors > 0 || (strict && failed > 0) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
