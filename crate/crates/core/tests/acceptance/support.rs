//! Small-graph enumeration, brute-force isomorphism and sampling helpers.

use std::collections::HashSet;

use dicut_core::{Coloring, DirectedMultigraph, Vertex};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All permutations of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Adjacency matrix with multiplicities, `m[u][v]` for the edge `u -> v`.
#[derive(Clone, Debug)]
pub struct Matrix {
    pub n: usize,
    pub m: Vec<u8>,
}

impl Matrix {
    pub fn at(&self, u: usize, v: usize) -> u8 {
        self.m[u * self.n + v]
    }

    pub fn connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..self.n {
                if !seen[v] && (self.at(u, v) > 0 || self.at(v, u) > 0) {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    fn degree(&self, u: usize) -> u32 {
        (0..self.n).map(|v| self.at(u, v) as u32 + self.at(v, u) as u32).sum()
    }

    fn degrees_sorted(&self) -> bool {
        (1..self.n).all(|u| self.degree(u - 1) >= self.degree(u))
    }

    /// Base-3 code of the relabeled matrix `v -> perm[v]`.
    fn code(&self, perm: &[usize]) -> u64 {
        let mut inv = vec![0; self.n];
        for (v, &p) in perm.iter().enumerate() {
            inv[p] = v;
        }
        let mut c = 0u64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    c = c * 3 + self.at(inv[i], inv[j]) as u64;
                }
            }
        }
        c
    }

    pub fn canonical_code(&self, perms: &[Vec<usize>]) -> u64 {
        perms.iter().map(|p| self.code(p)).min().expect("at least one permutation")
    }

    pub fn to_graph(&self) -> DirectedMultigraph {
        let pairs = (0..self.n).flat_map(|u| {
            (0..self.n)
                .filter(move |&v| self.at(u, v) > 0)
                .map(move |v| (((u + 1) as Vertex, (v + 1) as Vertex), self.at(u, v) as u32))
        });
        DirectedMultigraph::from_multiplicities(self.n, pairs).expect("valid matrix")
    }
}

/// Connected graphs on `n` vertices with entries in `0..=max_mult`, one per
/// isomorphism class.
pub fn connected_classes(n: usize, max_mult: u8) -> Vec<DirectedMultigraph> {
    let perms = permutations(n);
    let slots = n * (n - 1);
    let base = max_mult as u64 + 1;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for idx in 0..base.pow(slots as u32) {
        let mut m = vec![0u8; n * n];
        let mut rest = idx;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m[i * n + j] = (rest % base) as u8;
                    rest /= base;
                }
            }
        }
        let mat = Matrix { n, m };
        // every class has a labeling with non-increasing degrees
        if !mat.degrees_sorted() || !mat.connected() {
            continue;
        }
        if seen.insert(mat.canonical_code(&perms)) {
            out.push(mat.to_graph());
        }
    }
    out
}

/// A random connected multigraph on `n` vertices with multiplicity at most 2.
pub fn random_connected(n: usize, rng: &mut ChaCha8Rng) -> DirectedMultigraph {
    loop {
        let p = rng.random_range(0.15..0.5);
        let mut m = vec![0u8; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(p) {
                    m[i * n + j] = if rng.random_bool(0.3) { 2 } else { 1 };
                }
            }
        }
        let mat = Matrix { n, m };
        if mat.connected() {
            return mat.to_graph();
        }
    }
}

/// A uniformly random proper coloring of `g` with palette `1..=k`.
pub fn uniform_proper_coloring(g: &DirectedMultigraph, k: u32, rng: &mut ChaCha8Rng) -> Option<Coloring> {
    let n = g.n();
    let proper = |c: &[u32]| g.edges().iter().all(|&((u, v), _)| c[u as usize - 1] != c[v as usize - 1]);
    for _ in 0..2000 {
        let c: Vec<u32> = (0..n).map(|_| rng.random_range(1..=k)).collect();
        if proper(&c) {
            return Coloring::from_colors(k, c).ok();
        }
    }
    let mut all = Vec::new();
    let mut c = vec![1u32; n];
    loop {
        if proper(&c) {
            all.push(c.clone());
        }
        let mut i = 0;
        while i < n && c[i] == k {
            c[i] = 1;
            i += 1;
        }
        if i == n {
            break;
        }
        c[i] += 1;
    }
    let pick = all.choose(rng)?.clone();
    Coloring::from_colors(k, pick).ok()
}

/// Up to `count` random proper colorings with `k` drawn from `2..=k_max`,
/// raising `k` when a draw admits none.
pub fn random_colorings(g: &DirectedMultigraph, count: usize, k_max: u32, rng: &mut ChaCha8Rng) -> Vec<Coloring> {
    let mut out = Vec::new();
    for _ in 0..count {
        let start = rng.random_range(2..=k_max);
        if let Some(chi) = (start..=k_max).find_map(|k| uniform_proper_coloring(g, k, rng)) {
            out.push(chi);
        }
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Largest relative deviation of `values` from their mean.
pub fn spread(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean).abs() / mean).fold(0.0, f64::max)
}
