//! Canonical forms and degree-certified sample types.

use std::collections::{BTreeMap, HashMap};

use dicut_core::adversarial::{accepted_types, InducedSample};
use dicut_core::generate::{capped_erdos_renyi, random_proper_coloring};
use dicut_core::{canonicalize, nbrtype, Coloring, DirectedMultigraph, DoublyRootedColoredGraph, RootedType, Vertex};
use rand::Rng;

use crate::support::{permutations, rng};
use crate::{CheckResult, Outcome};

const MAX_VERTICES: usize = 5;
/// Vertex counts up to this bound also get multiplicity-2 edges.
const MULTI_EDGE_VERTICES: usize = 3;

/// Colored rooted graph on `0..a` with root `(0, 1)`.
struct Small {
    a: usize,
    k: u32,
    colors: Vec<u32>,
    m: Vec<u8>,
}

impl Small {
    /// Minimum code over relabelings that fix both roots.
    fn brute_key(&self, perms: &[Vec<usize>]) -> u64 {
        let a = self.a;
        let mut best = u64::MAX;
        let mut inv = vec![0usize; a];
        for p in perms {
            inv[0] = 0;
            inv[1] = 1;
            for (i, &q) in p.iter().enumerate() {
                inv[q + 2] = i + 2;
            }
            let mut code = (a as u64) << 2 | self.k as u64;
            for &v in &inv {
                code = code << 2 | self.colors[v] as u64;
            }
            for &i in &inv {
                for &j in &inv {
                    if i != j {
                        code = code << 2 | self.m[i * a + j] as u64;
                    }
                }
            }
            best = best.min(code);
        }
        best
    }

    fn rooted(&self) -> DoublyRootedColoredGraph {
        let a = self.a;
        let pairs = (0..a).flat_map(|u| {
            (0..a)
                .filter(move |&v| self.m[u * a + v] > 0)
                .map(move |v| (((u + 1) as Vertex, (v + 1) as Vertex), self.m[u * a + v] as u32))
        });
        let g = DirectedMultigraph::from_multiplicities(a, pairs).expect("valid");
        let chi = Coloring::from_colors(self.k, self.colors.clone()).expect("valid");
        DoublyRootedColoredGraph::new(g, chi, (1, 2)).expect("root edge present and coloring proper")
    }
}

fn colorings(a: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..a {
        out = out
            .into_iter()
            .flat_map(|c: Vec<u32>| (1..=k).map(move |x| [c.clone(), vec![x]].concat()))
            .collect();
    }
    out.retain(|c| c[0] != c[1]);
    // graphs can only be isomorphic within one (root colors, other color multiset) group
    out.sort_by_key(|c| {
        let mut rest = c[2..].to_vec();
        rest.sort_unstable();
        (c[0], c[1], rest)
    });
    out
}

fn group_of(c: &[u32]) -> (u32, u32, Vec<u32>) {
    let mut rest = c[2..].to_vec();
    rest.sort_unstable();
    (c[0], c[1], rest)
}

pub fn canonical_form() -> CheckResult {
    let mut graphs = 0u64;
    let mut classes = 0u64;
    let mut disagreements = 0u64;
    for a in 2..=MAX_VERTICES {
        let perms = permutations(a - 2);
        let states: Vec<(u8, u8)> = if a <= MULTI_EDGE_VERTICES {
            (0..3).flat_map(|x| (0..3).map(move |y| (x, y))).collect()
        } else {
            (0..2).flat_map(|x| (0..2).map(move |y| (x, y))).collect()
        };
        for k in 2..=3u32 {
            let mut by_canon: HashMap<RootedType, u64> = HashMap::new();
            let mut by_brute: HashMap<u64, RootedType> = HashMap::new();
            let mut group = None;
            for colors in colorings(a, k) {
                let g = group_of(&colors);
                if group.as_ref() != Some(&g) {
                    classes += by_canon.len() as u64;
                    by_canon.clear();
                    by_brute.clear();
                    group = Some(g);
                }
                let pairs: Vec<(usize, usize)> = (0..a)
                    .flat_map(|i| (i + 1..a).map(move |j| (i, j)))
                    .filter(|&(i, j)| colors[i] != colors[j])
                    .collect();
                let mut choice = vec![0usize; pairs.len()];
                loop {
                    let mut m = vec![0u8; a * a];
                    for (&(i, j), &s) in pairs.iter().zip(&choice) {
                        m[i * a + j] = states[s].0;
                        m[j * a + i] = states[s].1;
                    }
                    if m[1] > 0 {
                        let small = Small {
                            a,
                            k,
                            colors: colors.clone(),
                            m,
                        };
                        let canon = canonicalize(&small.rooted())?;
                        let brute = small.brute_key(&perms);
                        graphs += 1;
                        let c_ok = *by_canon.entry(canon.clone()).or_insert(brute) == brute;
                        let b_ok = *by_brute.entry(brute).or_insert(canon.clone()) == canon;
                        if !(c_ok && b_ok) {
                            disagreements += 1;
                        }
                    }
                    let mut i = 0;
                    while i < choice.len() && choice[i] + 1 == states.len() {
                        choice[i] = 0;
                        i += 1;
                    }
                    if i == choice.len() {
                        break;
                    }
                    choice[i] += 1;
                }
            }
            classes += by_canon.len() as u64;
        }
    }
    Ok(Outcome::new(
        disagreements == 0,
        format!("{graphs} rooted colored graphs (<= {MAX_VERTICES} vertices, k in 2..=3), {classes} classes, {disagreements} disagreements"),
    ))
}

pub fn degree_matching() -> CheckResult {
    let mut r = rng(5);
    let mut accepted = 0u64;
    let mut false_positives = 0u64;
    let mut by_ell: BTreeMap<u32, u64> = BTreeMap::new();
    let instances = 500;
    for _ in 0..instances {
        let n = r.random_range(30..=150);
        let avg = r.random_range(1.5..3.0);
        let g = capped_erdos_renyi(n, avg, 3, &mut r)?;
        let Some(chi) = random_proper_coloring(&g, 3, &mut r).or_else(|| random_proper_coloring(&g, 4, &mut r)) else {
            continue;
        };
        let ell = r.random_range(1..=2);
        let q = r.random_range(0.3..0.95);
        let s: Vec<Vertex> = (1..=n as Vertex).filter(|_| r.random_bool(q)).collect();
        let sample = InducedSample::from_graph(&g, &s);
        for (e, _, t) in accepted_types(&sample, &chi, ell)? {
            accepted += 1;
            *by_ell.entry(ell).or_insert(0) += 1;
            if t != nbrtype(&g, &chi, ell, e)? {
                false_positives += 1;
            }
        }
    }
    Ok(Outcome::new(
        false_positives == 0 && accepted > 0,
        format!("{instances} instances, {accepted} accepted edges {by_ell:?} by radius, {false_positives} false positives"),
    ))
}
