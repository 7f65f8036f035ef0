//! Exact rational checks on the small-graph suite.

use std::sync::OnceLock;

use dicut_core::{dicut_value, edge_type_counts, maxval_bruteforce, pos_all, Coloring, DirectedMultigraph};
use dicut_core::local::local_expectation_exact;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::support::{connected_classes, random_colorings, random_connected, rng};
use crate::{CheckResult, Outcome};

const COLORINGS_PER_GRAPH: usize = 5;
const MAX_COLORS: u32 = 4;
const RANDOM_SIX_VERTEX: usize = 1000;

pub struct Instance {
    pub graph: DirectedMultigraph,
    pub maxval: BigRational,
    pub colorings: Vec<Coloring>,
}

pub struct Suite {
    pub instances: Vec<Instance>,
    /// Graphs with no proper coloring in at most `MAX_COLORS` colors.
    pub skipped: usize,
}

/// Connected multigraphs: every class with n <= 4 and multiplicity <= 2,
/// every simple class with n = 5, and random graphs with n = 6.
pub fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let mut graphs = Vec::new();
        for n in 2..=4 {
            graphs.extend(connected_classes(n, 2));
        }
        graphs.extend(connected_classes(5, 1));
        let mut r = rng(6);
        graphs.extend((0..RANDOM_SIX_VERTEX).map(|_| random_connected(6, &mut r)));

        let mut r = rng(1);
        let mut instances = Vec::new();
        let mut skipped = 0;
        for g in graphs {
            let colorings = random_colorings(&g, COLORINGS_PER_GRAPH, MAX_COLORS, &mut r);
            if colorings.is_empty() {
                skipped += 1;
                continue;
            }
            let maxval = maxval_bruteforce(&g, 24).expect("small graph");
            instances.push(Instance {
                graph: g,
                maxval,
                colorings,
            });
        }
        Suite { instances, skipped }
    })
}

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn half_approximation() -> CheckResult {
    let suite = suite();
    let half = ratio(1, 2);
    let mut checks = 0usize;
    let mut violations = 0usize;
    let mut worst = BigRational::one();
    for inst in &suite.instances {
        for chi in &inst.colorings {
            for alpha in [BigRational::zero(), ratio(1, 10)] {
                let x = pos_all(&inst.graph, chi, alpha.clone())?;
                let val = dicut_value(&inst.graph, &x)?;
                let lower = (&half - &alpha) * &inst.maxval;
                if val < lower || val > inst.maxval {
                    violations += 1;
                }
                if alpha.is_zero() {
                    let r = &val / &inst.maxval;
                    if r < worst {
                        worst = r;
                    }
                }
                checks += 1;
            }
        }
    }
    Ok(Outcome::new(
        violations == 0,
        format!(
            "{} graphs ({} skipped, chromatic number > {MAX_COLORS}), {checks} (coloring, alpha) checks, {violations} violations, worst val/maxval at alpha=0 = {worst}",
            suite.instances.len(),
            suite.skipped
        ),
    ))
}

pub fn local_expectation() -> CheckResult {
    let suite = suite();
    let half = ratio(1, 2);
    let mut graphs = 0usize;
    let mut checks = 0usize;
    let mut violations = 0usize;
    let mut mismatches = 0usize;
    for inst in suite.instances.iter().filter(|i| i.graph.max_degree() <= 3) {
        graphs += 1;
        for chi in &inst.colorings {
            // radius k reaches every vertex the color recursion can touch
            let counts = edge_type_counts(&inst.graph, chi, chi.k())?;
            let e = local_expectation_exact(&counts)?;
            if e < &half * &inst.maxval || e > inst.maxval {
                violations += 1;
            }
            let direct = dicut_value(&inst.graph, &pos_all(&inst.graph, chi, BigRational::zero())?)?;
            if direct != e {
                mismatches += 1;
            }
            checks += 1;
        }
    }
    Ok(Outcome::new(
        violations == 0,
        format!(
            "{graphs} graphs with D <= 3, {checks} colorings, {violations} violations; E[Local] differs from val(pos) on {mismatches}"
        ),
    ))
}
