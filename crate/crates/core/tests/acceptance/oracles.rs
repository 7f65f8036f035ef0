//! Exact visible-type laws and the mixing matrix.

use std::collections::{BTreeMap, BTreeSet};

use dicut_core::generate::{capped_erdos_renyi, random_proper_coloring};
use dicut_core::random_order::{
    revealable_type, visdist_enumerate, visdist_exact, visdist_monte_carlo, visible_type, MixingMatrix,
    VisDistCache, DEFAULT_VISDIST_CAP,
};
use dicut_core::{
    ball, edge_type_counts, induced_subgraph, nbrtype, tv_distance, Coloring, DirectedMultigraph, Edge, RootedType,
    TypeDistribution,
};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::support::rng;
use crate::{CheckResult, Outcome};

const TYPES: usize = 100;
const MAX_TYPE_EDGES: usize = 6;
const MC_ORDERINGS: usize = 100_000;
const MC_TOLERANCE: f64 = 0.02;
const DESK_GRAPHS: usize = 20;
/// Largest ball whose orderings are listed in full.
const MAX_BALL_EDGES: usize = 7;
const RECOVERY_TOLERANCE: f64 = 1e-9;

/// A random D <= 3 graph in which a few edges are doubled.
fn desk_graph(n: usize, avg: f64, cap: usize, r: &mut ChaCha8Rng) -> DirectedMultigraph {
    let g = capped_erdos_renyi(n, avg, cap, r).expect("valid parameters");
    let pairs: Vec<(Edge, u32)> = g
        .edges()
        .iter()
        .map(|&(e, c)| (e, if r.random_bool(0.1) { c + 1 } else { c }))
        .collect();
    DirectedMultigraph::from_multiplicities(n, pairs).expect("valid")
}

fn colored(g: &DirectedMultigraph, r: &mut ChaCha8Rng) -> Option<Coloring> {
    let k = r.random_range(2..=3);
    (k..=4).find_map(|k| random_proper_coloring(g, k, r))
}

fn random_types(r: &mut ChaCha8Rng) -> Vec<(RootedType, u32)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < TYPES {
        let n = r.random_range(6..=14);
        let g = desk_graph(n, r.random_range(1.5..3.0), 3, r);
        let Some(chi) = colored(&g, r) else { continue };
        let Some(&(e, _)) = g.edges().choose(r) else { continue };
        let ell = r.random_range(1..=2);
        let t = nbrtype(&g, &chi, ell, e).expect("edge of g");
        if t.edge_count() <= MAX_TYPE_EDGES && seen.insert((t.clone(), ell)) {
            out.push((t, ell));
        }
    }
    out
}

pub fn visdist() -> CheckResult {
    let mut r = rng(6);
    let types = random_types(&mut r);
    let mut unequal = 0;
    let mut worst_tv = 0.0f64;
    let mut support = 0;
    for (t, ell) in &types {
        let exact = visdist_exact(t, *ell, DEFAULT_VISDIST_CAP)?;
        if exact != visdist_enumerate(t, *ell, MAX_TYPE_EDGES)? {
            unequal += 1;
        }
        support += exact.len();
        let float = TypeDistribution::from_weights(exact.iter().map(|(t, w)| (t.clone(), w.to_f64().unwrap())).collect());
        let mc = visdist_monte_carlo(t, *ell, MC_ORDERINGS, &mut r)?;
        worst_tv = worst_tv.max(tv_distance(&float, &mc));
    }
    Ok(Outcome::new(
        unequal == 0 && worst_tv <= MC_TOLERANCE,
        format!(
            "{} types with <= {MAX_TYPE_EDGES} edges ({support} visible outcomes): exact != enumeration on {unequal}; worst Monte Carlo TV over {MC_ORDERINGS} orderings {worst_tv:.4} (limit {MC_TOLERANCE})",
            types.len()
        ),
    ))
}

fn permute(items: &mut [Edge], k: usize, f: &mut dyn FnMut(&[Edge])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Law of the visible type of a uniform edge under a uniform ordering, by
/// listing every ordering of each edge's ball.
fn visible_law(g: &DirectedMultigraph, chi: &Coloring, ell: u32) -> Option<BTreeMap<RootedType, BigRational>> {
    let mut law: BTreeMap<RootedType, BigRational> = BTreeMap::new();
    let m = BigRational::from_integer(g.edge_count().into());
    for &((u, v), c) in g.edges() {
        let h = induced_subgraph(g, &ball(g, ell, &[u, v]).ok()?).ok()?;
        let chi_h = chi.restrict(&h.labels);
        let root = (h.local(u)?, h.local(v)?);
        let mut order: Vec<Edge> = h.graph.edge_sequence().collect();
        if order.len() > MAX_BALL_EDGES {
            return None;
        }
        let mut counts: BTreeMap<RootedType, u64> = BTreeMap::new();
        let mut total = 0u64;
        permute(&mut order, 0, &mut |ord| {
            let t = visible_type(&h.graph, &chi_h, ord, ell, root).expect("root in ball");
            *counts.entry(t).or_insert(0) += 1;
            total += 1;
        });
        for (t, n) in counts {
            let w = BigRational::new((n * c as u64).into(), total.into()) / &m;
            *law.entry(t).or_insert_with(BigRational::zero) += w;
        }
    }
    Some(law)
}

pub fn mixing_inversion() -> CheckResult {
    let mut r = rng(7);
    let mut graphs = 0;
    let mut product_mismatch = 0;
    let mut worst_err = 0.0f64;
    let mut hidden_edges = 0;
    let mut max_dim = 0;
    let mut cache_by_ell: BTreeMap<u32, VisDistCache> = BTreeMap::new();
    while graphs < DESK_GRAPHS {
        let ell = if graphs % 2 == 0 { 1 } else { 2 };
        let cap = if ell == 1 { 3 } else { 2 };
        let g = desk_graph(r.random_range(10..=24), r.random_range(1.2..2.5), cap, &mut r);
        if g.edge_count() == 0 {
            continue;
        }
        let Some(chi) = colored(&g, &mut r) else { continue };
        let Some(visible) = visible_law(&g, &chi, ell) else { continue };
        let m = BigRational::from_integer(g.edge_count().into());
        let mut revealable: BTreeMap<RootedType, BigRational> = BTreeMap::new();
        for (t, c) in edge_type_counts(&g, &chi, ell)? {
            let rt = revealable_type(&t, ell)?;
            if rt != t {
                hidden_edges += c;
            }
            *revealable.entry(rt).or_insert_with(BigRational::zero) += BigRational::from_integer(c.into()) / &m;
        }
        let basis: Vec<RootedType> = revealable.keys().chain(visible.keys()).cloned().collect();
        let cache = cache_by_ell.entry(ell).or_insert_with(|| VisDistCache::new(ell, 12));
        let mat = MixingMatrix::build(&basis, cache)?;
        max_dim = max_dim.max(mat.dim());
        let d: Vec<BigRational> = mat.types().iter().map(|t| revealable.get(t).cloned().unwrap_or_else(BigRational::zero)).collect();
        let v: Vec<BigRational> = mat.types().iter().map(|t| visible.get(t).cloned().unwrap_or_else(BigRational::zero)).collect();
        if mat.apply_exact(&d) != v || !mat.is_upper_triangular() || !mat.diagonal_positive() {
            product_mismatch += 1;
        }
        let solved = mat.solve(&v.iter().map(|x| x.to_f64().unwrap()).collect::<Vec<_>>());
        for (x, y) in solved.iter().zip(&d) {
            worst_err = worst_err.max((x - y.to_f64().unwrap()).abs());
        }
        graphs += 1;
    }
    Ok(Outcome::new(
        product_mismatch == 0 && worst_err <= RECOVERY_TOLERANCE,
        format!(
            "{graphs} desk graphs (ell 1 and 2, matrices up to {max_dim} types): M d != visible on {product_mismatch}; worst back-substitution error {worst_err:.2e}; {hidden_edges} edges carry types with never-visible edges and are compared on their revealable part"
        ),
    ))
}
