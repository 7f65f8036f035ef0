//! Sampling primitives: PosEst, reservoirs, hashing and the coloring filter.

use dicut_core::generate::random_regular;
use dicut_core::local::PosEstimator;
use dicut_core::stream::ReservoirSet;
use dicut_core::{pos, sample_coloring, sample_hash, Coloring, DirectedMultigraph, LocalParams, Vertex};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::support::rng;
use crate::{CheckResult, Outcome};

const DEPTH_TWO_VERTICES: usize = 20;
const DRAWS: usize = 1000;
const POS_D_SAMP: usize = 500;
const POS_ALPHA: f64 = 0.1;
const POS_TOLERANCE: f64 = 0.03;

/// Random 3-partite graph: colors are fixed first and edges only join
/// different colors, so the coloring is proper by construction.
fn tripartite(n: usize, p: f64, seed: u64) -> (DirectedMultigraph, Coloring) {
    let mut r = rng(seed);
    let colors: Vec<u32> = (0..n).map(|_| r.random_range(1..=3)).collect();
    let mut edges = Vec::new();
    for u in 1..=n as Vertex {
        for v in u + 1..=n as Vertex {
            if colors[u as usize - 1] != colors[v as usize - 1] && r.random_bool(p) {
                edges.push(if r.random_bool(0.5) { (u, v) } else { (v, u) });
            }
        }
    }
    (
        DirectedMultigraph::from_edges(n, edges).expect("valid"),
        Coloring::from_colors(3, colors).expect("valid"),
    )
}

pub fn pos_est_concentration() -> CheckResult {
    let (g, chi) = tripartite(900, 0.15, 10);
    let params = LocalParams::new(POS_ALPHA, POS_D_SAMP)?;
    // color-3 vertices reach color-1 vertices through color-2 neighbors:
    // their estimate recurses two levels
    let depth_two: Vec<Vertex> = g
        .vertices()
        .filter(|&v| chi.color(v) == 3)
        .filter(|&v| {
            g.neighbors(v)
                .any(|u| chi.color(u) == 2 && g.neighbors(u).any(|w| chi.color(w) == 1))
        })
        .take(DEPTH_TWO_VERTICES)
        .collect();
    let mut est = PosEstimator::new(&g, &chi, params)?;
    let mut r = rng(11);
    let mut worst = 0.0f64;
    let mut interior = 0;
    for &v in &depth_two {
        let exact: f64 = pos(&g, &chi, POS_ALPHA, v)?;
        if exact > 0.0 && exact < 1.0 {
            interior += 1;
        }
        let mut sum = 0.0;
        for _ in 0..DRAWS {
            sum += est.draw(v, &mut r)?;
        }
        worst = worst.max((sum / DRAWS as f64 - exact).abs());
    }
    Ok(Outcome::new(
        depth_two.len() == DEPTH_TWO_VERTICES && worst <= POS_TOLERANCE,
        format!(
            "{} depth-2 vertices ({interior} with pos strictly inside (0, 1)), max degree {}, D_samp {POS_D_SAMP}, alpha {POS_ALPHA}: worst |mean of {DRAWS} draws - pos| = {worst:.4} (limit {POS_TOLERANCE})",
            depth_two.len(),
            g.max_degree()
        ),
    ))
}

/// Pearson statistic against the uniform law on `counts.len()` cells.
fn chi_square(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

fn critical(cells: usize) -> f64 {
    ChiSquared::new((cells - 1) as f64).expect("positive df").inverse_cdf(0.99)
}

pub fn uniformity() -> CheckResult {
    let mut r = rng(12);
    let mut lines = Vec::new();
    let mut pass = true;

    // each slot of a reservoir is uniform over the stream, and two slots are
    // independent of each other
    let items = 20usize;
    let trials = 40_000;
    let mut slot = vec![0u64; items];
    let mut joint = vec![0u64; items * items];
    for _ in 0..trials {
        let mut res = ReservoirSet::new(2)?;
        for i in 0..items {
            res.offer(i, &mut r);
        }
        let s = res.samples().expect("non-empty stream");
        slot[s[0]] += 1;
        joint[s[0] * items + s[1]] += 1;
    }
    for (name, counts) in [("reservoir slot", &slot), ("reservoir slot pair", &joint)] {
        let (stat, crit) = (chi_square(counts), critical(counts.len()));
        pass &= stat <= crit;
        lines.push(format!("{name} chi2 {stat:.1} <= {crit:.1}"));
    }

    // (h(x), h(y)) is uniform on range^2 over the random choice of h
    let range = 8u64;
    let keys = [(1u64, 2u64), (3, 1000), (999, 1000), (17, 4242)];
    let mut pairs = vec![vec![0u64; (range * range) as usize]; keys.len()];
    for _ in 0..trials {
        let h = sample_hash(2, 10_000, range, &mut r)?;
        for (cell, &(x, y)) in pairs.iter_mut().zip(&keys) {
            cell[(h.eval(x) * range + h.eval(y)) as usize] += 1;
        }
    }
    let crit = critical((range * range) as usize);
    let worst = pairs.iter().map(|c| chi_square(c)).fold(0.0, f64::max);
    pass &= worst <= crit;
    lines.push(format!("hash pairs worst chi2 over {} key pairs {worst:.1} <= {crit:.1}", keys.len()));

    Ok(Outcome::new(pass, lines.join("; ")))
}

pub fn coloring_filter() -> CheckResult {
    let k = 1000;
    let delta = 0.1;
    let seeds = 1000;
    let mut bad = 0;
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let mut r = rng(seed);
        let g = random_regular(3000, 3, &mut r)?;
        let chi = sample_coloring(g.n(), k, &mut r)?;
        let mono: u64 = g
            .edges()
            .iter()
            .filter(|((u, v), _)| chi.color(*u) == chi.color(*v))
            .map(|&(_, c)| c as u64)
            .sum();
        let frac = mono as f64 / g.edge_count() as f64;
        worst = worst.max(frac);
        if frac >= delta {
            bad += 1;
        }
    }
    let share = bad as f64 / seeds as f64;
    Ok(Outcome::new(
        share < 0.05,
        format!("monochromatic fraction >= {delta} on {bad}/{seeds} seeds (limit 5%), worst fraction {worst:.4}"),
    ))
}
