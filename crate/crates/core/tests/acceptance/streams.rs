//! End-to-end streaming estimators against exact oracles.

use dicut_core::adversarial::{AdvEstimator, AdvParams};
use dicut_core::generate::{
    capped_erdos_renyi, disjoint_paths, random_proper_coloring, random_regular, sources_sinks, star,
};
use dicut_core::multipass::{multipass_estimate, MultipassParams};
use dicut_core::random_order::RandOrderEstimator;
use dicut_core::{edge_type_distribution, maxval_bruteforce, run_passes, tv_distance, Coloring, DirectedMultigraph, PassStream};
use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::support::{loglog_slope, rng, spread};
use crate::{CheckResult, Outcome};

const SEEDS: u64 = 50;
const SIZES: [usize; 3] = [1_000, 10_000, 100_000];
const TV_LIMIT: f64 = 0.1;
const SUCCESS_RATE: f64 = 0.9;
const FLAT_TOLERANCE: f64 = 0.1;

fn colored_regular(n: usize, r: &mut ChaCha8Rng) -> Result<(DirectedMultigraph, Coloring), dicut_core::Error> {
    loop {
        let g = random_regular(n, 3, r)?;
        if let Some(chi) = random_proper_coloring(&g, 3, r) {
            return Ok((g, chi));
        }
    }
}

pub fn adversarial() -> CheckResult {
    let params = AdvParams {
        d: 3,
        ell: 1,
        eps: 0.1,
        delta: 0.1,
    };
    let run = |n: usize, seed: u64| -> Result<(Option<f64>, usize), dicut_core::Error> {
        let mut r = rng(seed);
        let (g, chi) = colored_regular(n, &mut r)?;
        let truth = edge_type_distribution(&g, &chi, params.ell)?;
        let est = AdvEstimator::new(n, chi, params, &mut r)?;
        let rec = run_passes(est, &PassStream::random(&g, &mut r))?;
        let tv = rec.output.distribution.as_ref().map(|d| tv_distance(d, &truth));
        Ok((tv, rec.peak_words))
    };
    let mut good = 0;
    let mut failed_runs = 0;
    let mut worst = 0.0f64;
    for seed in 0..SEEDS {
        match run(10_000, seed)?.0 {
            Some(tv) => {
                worst = worst.max(tv);
                if tv <= TV_LIMIT {
                    good += 1;
                }
            }
            None => failed_runs += 1,
        }
    }
    let mut peaks = Vec::new();
    for n in SIZES {
        peaks.push((n as f64, run(n, 1000 + n as u64)?.1 as f64));
    }
    let slope = loglog_slope(&peaks);
    let rate = good as f64 / SEEDS as f64;
    Ok(Outcome::new(
        rate >= SUCCESS_RATE && slope < 1.0,
        format!(
            "TV <= {TV_LIMIT} on {good}/{SEEDS} seeds at n=10^4 ({failed_runs} collector failures, worst TV {worst:.3}); peak words {:?} for n = {SIZES:?}, log-log slope {slope:.3} (needs < 1)",
            peaks.iter().map(|p| p.1 as u64).collect::<Vec<_>>()
        ),
    ))
}

#[derive(Clone, Copy)]
enum Family {
    /// Disjoint 3-edge paths, 2 colors, radius 2.
    Paths,
    /// Sparse degree-capped random graphs, proper 2-coloring, radius 1.
    Sparse,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Paths => "disjoint paths",
            Family::Sparse => "random D<=3",
        }
    }

    fn instance(self, n: usize, r: &mut ChaCha8Rng) -> Result<(DirectedMultigraph, Coloring, u32), dicut_core::Error> {
        loop {
            let (g, ell) = match self {
                Family::Paths => (disjoint_paths(n / 4, 3)?, 2),
                Family::Sparse => (capped_erdos_renyi(n, 0.5, 3, r)?, 1),
            };
            if let Some(chi) = random_proper_coloring(&g, 2, r) {
                return Ok((g, chi, ell));
            }
        }
    }
}

const T_SAMPLES: usize = 2000;

pub fn random_order() -> CheckResult {
    let run = |family: Family, n: usize, seed: u64| -> Result<(f64, usize), dicut_core::Error> {
        let mut r = rng(seed);
        let (g, chi, ell) = family.instance(n, &mut r)?;
        let truth = edge_type_distribution(&g, &chi, ell)?;
        let est = RandOrderEstimator::new(chi, ell, T_SAMPLES)?;
        let rec = run_passes(est, &PassStream::random(&g, &mut r))?;
        Ok((tv_distance(&rec.output.output_distribution, &truth), rec.peak_words))
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for family in [Family::Paths, Family::Sparse] {
        let mut tvs = Vec::new();
        for seed in 0..SEEDS {
            tvs.push(run(family, 10_000, seed)?.0);
        }
        let good = tvs.iter().filter(|&&tv| tv <= TV_LIMIT).count();
        let tight = tvs.iter().filter(|&&tv| tv <= 0.05).count();
        let mut peaks = Vec::new();
        for n in SIZES {
            let mut sum = 0.0;
            for seed in 0..3 {
                sum += run(family, n, 500 + seed)?.1 as f64;
            }
            peaks.push(sum / 3.0);
        }
        let dev = spread(&peaks);
        let ok = good as f64 >= SUCCESS_RATE * SEEDS as f64 && dev <= FLAT_TOLERANCE;
        pass &= ok;
        parts.push(format!(
            "{}: TV <= {TV_LIMIT} on {good}/{SEEDS} (<= 0.05 on {tight}), mean peak words {:?} over n = {SIZES:?}, spread {:.1}%",
            family.name(),
            peaks.iter().map(|p| p.round() as u64).collect::<Vec<_>>(),
            100.0 * dev
        ));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

const MULTIPASS_COLORS: u32 = 5;
const D_SAMP: usize = 200;
const D_INNER: usize = 4;
const EPS_EFF: f64 = 0.1;

/// Random graphs on 12 to 24 vertices: sparse and dense capped graphs, stars
/// and source-sink bipartite graphs.
fn multipass_suite(i: u64) -> Result<DirectedMultigraph, dicut_core::Error> {
    let mut r = rng(9000 + i);
    let n = r.random_range(12..=24);
    loop {
        let g = match i % 5 {
            0 | 1 => capped_erdos_renyi(n, r.random_range(1.5..4.0), 4, &mut r)?,
            2 => capped_erdos_renyi(n, r.random_range(4.0..8.0), 10, &mut r)?,
            3 => star(2, n / 2 - 1)?,
            _ => sources_sinks(n / 3, n - n / 3, 0.5, &mut r)?,
        };
        if g.edge_count() > 0 {
            return Ok(g);
        }
    }
}

pub fn multipass() -> CheckResult {
    let params = MultipassParams::desk(EPS_EFF, MULTIPASS_COLORS, D_SAMP, D_INNER)?;
    let mut inside = 0;
    let mut full_passes = 0;
    // an empty filtered graph ends after the first pass with output 0
    let mut empty = 0;
    let mut worst_ratio = f64::INFINITY;
    for i in 0..SEEDS {
        let g = multipass_suite(i)?;
        let maxval = maxval_bruteforce(&g, 24)?.to_f64().unwrap();
        let mut r = rng(i);
        let rec = multipass_estimate(&PassStream::adversarial(&g), g.n(), params, &mut r)?;
        let est = rec.output.cut_est;
        if est >= (0.5 - EPS_EFF) * maxval && est <= maxval {
            inside += 1;
        }
        if rec.output.filtered_edges == 0 {
            empty += 1;
        } else if rec.passes_used == MULTIPASS_COLORS as usize + 1 {
            full_passes += 1;
        }
        worst_ratio = worst_ratio.min(est / maxval);
    }
    let mut peaks = Vec::new();
    for n in SIZES {
        let mut sum = 0.0;
        let seeds = 10;
        for seed in 0..seeds {
            let mut r = rng(seed);
            let g = random_regular(n, 3, &mut r)?;
            let rec = multipass_estimate(&PassStream::adversarial(&g), n, params, &mut r)?;
            if rec.output.filtered_edges == 0 {
                empty += 1;
            } else if rec.passes_used == MULTIPASS_COLORS as usize + 1 {
                full_passes += 1;
            }
            sum += rec.peak_words as f64;
        }
        peaks.push(sum / seeds as f64);
    }
    let runs = SEEDS as usize + 10 * SIZES.len();
    let dev = spread(&peaks);
    Ok(Outcome::new(
        inside as f64 >= SUCCESS_RATE * SEEDS as f64 && full_passes + empty == runs && dev <= FLAT_TOLERANCE,
        format!(
            "Cut-Est in [{:.1} maxval, maxval] on {inside}/{SEEDS} (lowest ratio {worst_ratio:.3}); {full_passes}/{} runs with a non-empty filtered graph used k+1 = {} passes ({empty} empty); mean peak words {:?} over n = {SIZES:?} on 3-regular graphs, spread {:.1}%",
            0.5 - EPS_EFF,
            runs - empty,
            MULTIPASS_COLORS + 1,
            peaks.iter().map(|p| p.round() as u64).collect::<Vec<_>>(),
            100.0 * dev
        ),
    ))
}
