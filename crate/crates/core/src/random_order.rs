//! Single-pass edge-type distribution estimator for randomly ordered streams.
//!
//! Each sampled root edge grows a visible neighborhood: a later edge is kept
//! when it touches a vertex within distance `ell - 1` of the root in the
//! part kept so far. The visible type of an edge is a random subgraph of its
//! true type whose law depends only on the true type, so the observed mixture
//! is inverted through the (upper-triangular) mixing matrix.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Coloring, DirectedMultigraph, Edge, Vertex};
use crate::stream::{fix_normalization, SpaceMeter, StreamAlgorithm};
use crate::types::{DoublyRootedColoredGraph, RootedType, TypeCache, TypeDistribution};

/// Default bound on edges (with multiplicity) for exact visible distributions.
pub const DEFAULT_VISDIST_CAP: usize = 10;

/// Greedy visible neighborhood of one root edge.
#[derive(Debug, Clone)]
pub struct VisibleBuilder {
    root: Edge,
    ell: u32,
    /// `(vertex, distance to the root endpoints)`, root endpoints first.
    verts: Vec<(Vertex, u32)>,
    edges: Vec<(Edge, u32)>,
}

impl VisibleBuilder {
    pub fn new(root: Edge, ell: u32) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidParameter("visible neighborhoods need ell >= 1".into()));
        }
        if root.0 == root.1 {
            return Err(Error::SelfLoop(root.0));
        }
        Ok(Self {
            root,
            ell,
            verts: vec![(root.0, 0), (root.1, 0)],
            edges: Vec::new(),
        })
    }

    pub fn root(&self) -> Edge {
        self.root
    }

    fn dist(&self, v: Vertex) -> Option<u32> {
        self.verts.iter().find(|p| p.0 == v).map(|p| p.1)
    }

    /// Whether `v` is close enough for its edges to be kept.
    pub fn watches(&self, v: Vertex) -> bool {
        self.dist(v).is_some_and(|d| d < self.ell)
    }

    /// Vertices currently within distance `ell - 1`.
    pub fn watched(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.verts.iter().filter(|p| p.1 < self.ell).map(|p| p.0)
    }

    /// Offers the next stream edge; returns the vertices that became watched
    /// if it was kept, `None` otherwise.
    pub fn offer(&mut self, e: Edge) -> Option<Vec<Vertex>> {
        if !(self.watches(e.0) || self.watches(e.1)) {
            return None;
        }
        let before: Vec<Vertex> = self.watched().collect();
        match self.edges.iter_mut().find(|p| p.0 == e) {
            Some(p) => p.1 += 1,
            None => self.edges.push((e, 1)),
        }
        for v in [e.0, e.1] {
            if self.dist(v).is_none() {
                self.verts.push((v, u32::MAX));
            }
        }
        self.relax();
        Some(self.watched().filter(|v| !before.contains(v)).collect())
    }

    fn relax(&mut self) {
        let mut dist: HashMap<Vertex, u32> = HashMap::from([(self.root.0, 0), (self.root.1, 0)]);
        let mut q = VecDeque::from([self.root.0, self.root.1]);
        while let Some(w) = q.pop_front() {
            let d = dist[&w];
            for &((a, b), _) in &self.edges {
                let other = if a == w {
                    b
                } else if b == w {
                    a
                } else {
                    continue;
                };
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(other) {
                    e.insert(d + 1);
                    q.push_back(other);
                }
            }
        }
        for p in &mut self.verts {
            p.1 = dist[&p.0];
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.verts.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn words(&self) -> usize {
        2 * self.verts.len() + 3 * self.edges.len() + 2
    }

    /// The visible graph, relabeled, as a rooted colored graph.
    pub fn rooted_graph(&self, chi: &Coloring) -> Result<DoublyRootedColoredGraph> {
        let mut labels: Vec<Vertex> = self.verts.iter().map(|p| p.0).collect();
        labels.sort_unstable();
        let local = |v: Vertex| labels.binary_search(&v).expect("visible vertex") as Vertex + 1;
        let g = DirectedMultigraph::from_multiplicities(
            labels.len(),
            self.edges.iter().map(|&((a, b), c)| ((local(a), local(b)), c)),
        )?;
        DoublyRootedColoredGraph::new(g, chi.restrict(&labels), (local(self.root.0), local(self.root.1)))
    }
}

/// Visible type of `e` when the edges of `g` arrive in `ordering`.
pub fn visible_type(g: &DirectedMultigraph, chi: &Coloring, ordering: &[Edge], ell: u32, e: Edge) -> Result<RootedType> {
    if g.multiplicity(e.0, e.1) == 0 {
        return Err(Error::MissingEdge(e.0, e.1));
    }
    let mut b = VisibleBuilder::new(e, ell)?;
    for &f in ordering {
        b.offer(f);
    }
    crate::types::canonicalize(&b.rooted_graph(chi)?)
}

/// Largest visible type a type-`t` edge can show: `t` without the edges whose
/// endpoints both lie at distance `ell` from the root. Such edges are never
/// kept, so `t` and its revealable part have the same visible-type law.
pub fn revealable_type(t: &RootedType, ell: u32) -> Result<RootedType> {
    if ell == 0 {
        return Err(Error::InvalidParameter("visible neighborhoods need ell >= 1".into()));
    }
    let rep = t.representative();
    let dist = crate::graph::ball_distances(&rep.graph, ell, &[rep.root.0, rep.root.1]);
    let near = |v: Vertex| dist.get(&v).is_some_and(|&d| d < ell);
    let kept: Vec<(Edge, u32)> = rep
        .graph
        .edges()
        .iter()
        .copied()
        .filter(|&((u, v), _)| near(u) || near(v))
        .collect();
    if kept.len() == rep.graph.edges().len() {
        return Ok(t.clone());
    }
    let g = DirectedMultigraph::from_multiplicities(rep.graph.n(), kept)?;
    crate::types::canonicalize(&DoublyRootedColoredGraph::new(g, rep.coloring, rep.root)?)
}

pub type ExactDistribution = BTreeMap<RootedType, BigRational>;

/// Exact law of the visible type of a type-`t` edge under a uniformly
/// random ordering, by recursion over (kept edges, unread edges).
pub fn visdist_exact(t: &RootedType, ell: u32, cap: usize) -> Result<ExactDistribution> {
    if ell == 0 {
        return Err(Error::InvalidParameter("visible neighborhoods need ell >= 1".into()));
    }
    if t.edge_count() > cap {
        return Err(Error::CapExceeded {
            what: "edges in type for exact visible distribution",
            value: t.edge_count(),
            cap,
        });
    }
    let rep = t.representative();
    let mut rec = VisRecursion {
        edges: rep.graph.edges().iter().map(|&(e, _)| e).collect(),
        rep,
        ell,
        memo: HashMap::new(),
        leaves: HashMap::new(),
        cache: TypeCache::new(),
    };
    let rem: Vec<u8> = rec.rep.graph.edges().iter().map(|&(_, c)| c as u8).collect();
    let vis = vec![0u8; rem.len()];
    let out = rec.solve(vis, rem)?;
    Ok((*out).clone())
}

struct VisRecursion {
    rep: DoublyRootedColoredGraph,
    edges: Vec<Edge>,
    ell: u32,
    memo: HashMap<(Vec<u8>, Vec<u8>), Arc<ExactDistribution>>,
    leaves: HashMap<Vec<u8>, RootedType>,
    cache: TypeCache,
}

impl VisRecursion {
    fn watched(&self, vis: &[u8]) -> Vec<bool> {
        let n = self.rep.graph.n();
        let mut dist = vec![u32::MAX; n + 1];
        let (r, s) = self.rep.root;
        dist[r as usize] = 0;
        dist[s as usize] = 0;
        let mut q = VecDeque::from([r, s]);
        while let Some(w) = q.pop_front() {
            for (i, &(a, b)) in self.edges.iter().enumerate() {
                if vis[i] == 0 {
                    continue;
                }
                let other = if a == w {
                    b
                } else if b == w {
                    a
                } else {
                    continue;
                };
                if dist[other as usize] == u32::MAX {
                    dist[other as usize] = dist[w as usize] + 1;
                    q.push_back(other);
                }
            }
        }
        dist.iter().map(|&d| d < self.ell).collect()
    }

    fn leaf(&mut self, vis: &[u8]) -> Result<RootedType> {
        if let Some(t) = self.leaves.get(vis) {
            return Ok(t.clone());
        }
        let (r, s) = self.rep.root;
        let mut labels: Vec<Vertex> = vec![r, s];
        for (i, &(a, b)) in self.edges.iter().enumerate() {
            if vis[i] > 0 {
                labels.push(a);
                labels.push(b);
            }
        }
        labels.sort_unstable();
        labels.dedup();
        let local = |v: Vertex| labels.binary_search(&v).expect("kept vertex") as Vertex + 1;
        let g = DirectedMultigraph::from_multiplicities(
            labels.len(),
            self.edges
                .iter()
                .zip(vis)
                .filter(|(_, &c)| c > 0)
                .map(|(&(a, b), &c)| ((local(a), local(b)), c as u32)),
        )?;
        let drg = DoublyRootedColoredGraph::new(g, self.rep.coloring.restrict(&labels), (local(r), local(s)))?;
        let t = self.cache.canonicalize(&drg)?;
        self.leaves.insert(vis.to_vec(), t.clone());
        Ok(t)
    }

    fn solve(&mut self, vis: Vec<u8>, rem: Vec<u8>) -> Result<Arc<ExactDistribution>> {
        let key = (vis, rem);
        if let Some(d) = self.memo.get(&key) {
            return Ok(d.clone());
        }
        let (vis, rem) = key.clone();
        let total: u32 = rem.iter().map(|&c| c as u32).sum();
        let out = if total == 0 {
            BTreeMap::from([(self.leaf(&vis)?, BigRational::from_integer(1.into()))])
        } else {
            let watched = self.watched(&vis);
            let mut acc: ExactDistribution = BTreeMap::new();
            for i in 0..rem.len() {
                if rem[i] == 0 {
                    continue;
                }
                let (a, b) = self.edges[i];
                let mut next_vis = vis.clone();
                if watched[a as usize] || watched[b as usize] {
                    next_vis[i] += 1;
                }
                let mut next_rem = rem.clone();
                next_rem[i] -= 1;
                let p = BigRational::new(rem[i].into(), total.into());
                for (t, w) in self.solve(next_vis, next_rem)?.iter() {
                    *acc.entry(t.clone()).or_insert_with(BigRational::zero) += &p * w;
                }
            }
            acc
        };
        let out = Arc::new(out);
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}

fn edge_copies(g: &DirectedMultigraph) -> Vec<Edge> {
    g.edge_sequence().collect()
}

/// Visible-type law of a type by listing every ordering of its edge copies.
pub fn visdist_enumerate(t: &RootedType, ell: u32, cap: usize) -> Result<ExactDistribution> {
    if t.edge_count() > cap {
        return Err(Error::CapExceeded {
            what: "edges in type for ordering enumeration",
            value: t.edge_count(),
            cap,
        });
    }
    let rep = t.representative();
    let mut order = edge_copies(&rep.graph);
    let mut counts: BTreeMap<RootedType, u64> = BTreeMap::new();
    let mut total = 0u64;
    let mut cache = TypeCache::new();
    permute(&mut order, 0, &mut |ord| {
        let mut b = VisibleBuilder::new(rep.root, ell)?;
        for &f in ord {
            b.offer(f);
        }
        *counts.entry(cache.canonicalize(&b.rooted_graph(&rep.coloring)?)?).or_insert(0) += 1;
        total += 1;
        Ok(())
    })?;
    Ok(counts
        .into_iter()
        .map(|(t, c)| (t, BigRational::new(c.into(), total.into())))
        .collect())
}

fn permute<F: FnMut(&[Edge]) -> Result<()>>(items: &mut [Edge], k: usize, f: &mut F) -> Result<()> {
    if k == items.len() {
        return f(items);
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f)?;
        items.swap(k, i);
    }
    Ok(())
}

/// Visible-type law estimated from `samples` random orderings.
pub fn visdist_monte_carlo<R: Rng + ?Sized>(t: &RootedType, ell: u32, samples: usize, rng: &mut R) -> Result<TypeDistribution> {
    let rep = t.representative();
    let mut order = edge_copies(&rep.graph);
    let mut cache = TypeCache::new();
    let mut seen = Vec::with_capacity(samples);
    for _ in 0..samples {
        order.shuffle(rng);
        let mut b = VisibleBuilder::new(rep.root, ell)?;
        for &f in &order {
            b.offer(f);
        }
        seen.push(cache.canonicalize(&b.rooted_graph(&rep.coloring)?)?);
    }
    TypeDistribution::empirical(seen.iter())
}

pub fn to_float(d: &ExactDistribution) -> TypeDistribution {
    TypeDistribution::from_weights(
        d.iter()
            .map(|(t, w)| (t.clone(), w.to_f64().expect("probability is finite")))
            .collect(),
    )
}

/// Memoized exact visible-type laws for one radius.
#[derive(Debug)]
pub struct VisDistCache {
    ell: u32,
    cap: usize,
    map: HashMap<RootedType, Arc<ExactDistribution>>,
}

impl VisDistCache {
    pub fn new(ell: u32, cap: usize) -> Self {
        Self {
            ell,
            cap,
            map: HashMap::new(),
        }
    }

    pub fn get(&mut self, t: &RootedType) -> Result<Arc<ExactDistribution>> {
        if let Some(d) = self.map.get(t) {
            return Ok(d.clone());
        }
        let d = Arc::new(visdist_exact(t, self.ell, self.cap)?);
        self.map.insert(t.clone(), d.clone());
        Ok(d)
    }
}

/// `M[i][j]` is the probability that a type-`types[j]` edge shows visible
/// type `types[i]`; types are sorted by (edges, vertices, encoding).
#[derive(Debug, Clone)]
pub struct MixingMatrix {
    types: Vec<RootedType>,
    exact: Vec<Vec<BigRational>>,
}

impl MixingMatrix {
    pub fn build(types: &[RootedType], cache: &mut VisDistCache) -> Result<Self> {
        let mut types = types.to_vec();
        types.sort_by(|a, b| a.size_key().cmp(&b.size_key()));
        types.dedup();
        let dim = types.len();
        let mut exact = vec![vec![BigRational::zero(); dim]; dim];
        for j in 0..dim {
            let law = cache.get(&types[j])?;
            for (i, t) in types.iter().enumerate() {
                if let Some(w) = law.get(t) {
                    exact[i][j] = w.clone();
                }
            }
        }
        Ok(Self { types, exact })
    }

    pub fn types(&self) -> &[RootedType] {
        &self.types
    }

    pub fn dim(&self) -> usize {
        self.types.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &BigRational {
        &self.exact[i][j]
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.dim()).all(|i| (0..i).all(|j| self.exact[i][j].is_zero()))
    }

    pub fn diagonal_positive(&self) -> bool {
        (0..self.dim()).all(|i| self.exact[i][i] > BigRational::zero())
    }

    pub fn column_sums(&self) -> Vec<BigRational> {
        (0..self.dim())
            .map(|j| (0..self.dim()).fold(BigRational::zero(), |acc, i| acc + &self.exact[i][j]))
            .collect()
    }

    /// `M d` in exact arithmetic.
    pub fn apply_exact(&self, d: &[BigRational]) -> Vec<BigRational> {
        (0..self.dim())
            .map(|i| (0..self.dim()).fold(BigRational::zero(), |acc, j| acc + &self.exact[i][j] * &d[j]))
            .collect()
    }

    /// Solves `M d = v` by back-substitution.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let m = |i: usize, j: usize| self.exact[i][j].to_f64().expect("finite entry");
        let mut d = vec![0.0; n];
        for i in (0..n).rev() {
            let tail: f64 = (i + 1..n).map(|j| m(i, j) * d[j]).sum();
            d[i] = (v[i] - tail) / m(i, i);
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandOrderReport {
    pub t_samples: usize,
    pub observed_visible_types: usize,
    pub matrix_dim: usize,
    /// Total mass of the solved vector after clamping, before normalization.
    pub residual_gamma: f64,
    pub visible_distribution: TypeDistribution,
    pub output_distribution: TypeDistribution,
}

pub struct RandOrderEstimator {
    chi: Coloring,
    ell: u32,
    t: usize,
    visdist_cap: usize,
    roots: Vec<Edge>,
    builders: Vec<VisibleBuilder>,
    index: HashMap<Vertex, Vec<usize>>,
    replayed: bool,
    words: usize,
    meter: SpaceMeter,
}

impl RandOrderEstimator {
    pub fn new(chi: Coloring, ell: u32, t_samples: usize) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidParameter("visible neighborhoods need ell >= 1".into()));
        }
        if t_samples == 0 {
            return Err(Error::InvalidParameter("t_samples must be positive".into()));
        }
        let words = chi.state_words() + 2;
        let mut meter = SpaceMeter::new();
        meter.set(words);
        Ok(Self {
            chi,
            ell,
            t: t_samples,
            visdist_cap: DEFAULT_VISDIST_CAP,
            roots: Vec::new(),
            builders: Vec::new(),
            index: HashMap::new(),
            replayed: false,
            words,
            meter,
        })
    }

    pub fn with_visdist_cap(mut self, cap: usize) -> Self {
        self.visdist_cap = cap;
        self
    }

    fn feed(&mut self, e: Edge) {
        let mut targets: Vec<usize> = Vec::new();
        for v in [e.0, e.1] {
            if let Some(list) = self.index.get(&v) {
                targets.extend(list);
            }
        }
        targets.sort_unstable();
        targets.dedup();
        for id in targets {
            let before = self.builders[id].words();
            if let Some(fresh) = self.builders[id].offer(e) {
                self.words += self.builders[id].words() - before;
                for v in fresh {
                    self.index.entry(v).or_default().push(id);
                    self.words += 1;
                }
            }
        }
        self.meter.set(self.words);
    }

    fn replay_roots(&mut self) {
        self.replayed = true;
        let roots = self.roots.clone();
        for e in roots {
            self.feed(e);
        }
    }
}

impl StreamAlgorithm for RandOrderEstimator {
    type Output = RandOrderReport;

    fn pass_cap(&self) -> usize {
        1
    }

    fn process(&mut self, e: Edge) {
        if self.roots.len() < self.t {
            let id = self.builders.len();
            let b = VisibleBuilder::new(e, self.ell).expect("stream edges are loop-free");
            self.words += b.words() + 2;
            for v in b.watched().collect::<Vec<_>>() {
                self.index.entry(v).or_default().push(id);
                self.words += 1;
            }
            self.builders.push(b);
            self.roots.push(e);
            self.meter.set(self.words);
            if self.roots.len() == self.t {
                self.replay_roots();
            }
            return;
        }
        self.feed(e);
    }

    fn end_pass(&mut self, _pass: usize) -> bool {
        if !self.replayed {
            self.replay_roots();
        }
        false
    }

    fn finalize(self) -> Result<RandOrderReport> {
        if self.builders.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let mut cache = TypeCache::new();
        let mut seen = Vec::with_capacity(self.builders.len());
        for b in &self.builders {
            seen.push(cache.canonicalize(&b.rooted_graph(&self.chi)?)?);
        }
        let visible = TypeDistribution::empirical(seen.iter())?;
        let candidates: Vec<RootedType> = visible.support().cloned().collect();
        let mut vis_cache = VisDistCache::new(self.ell, self.visdist_cap);
        let matrix = MixingMatrix::build(&candidates, &mut vis_cache)?;
        let v: Vec<f64> = matrix.types().iter().map(|t| visible.weight(t)).collect();
        let solved = matrix.solve(&v);
        let clamped: BTreeMap<RootedType, f64> = matrix
            .types()
            .iter()
            .zip(&solved)
            .map(|(t, &w)| (t.clone(), w.max(0.0)))
            .collect();
        let gamma: f64 = clamped.values().sum();
        if gamma < 0.5 {
            return Err(Error::InsufficientCoverage(gamma));
        }
        Ok(RandOrderReport {
            t_samples: self.builders.len(),
            observed_visible_types: visible.len(),
            matrix_dim: matrix.dim(),
            residual_gamma: gamma,
            output_distribution: fix_normalization(&clamped)?,
            visible_distribution: visible,
        })
    }

    fn meter(&self) -> &SpaceMeter {
        &self.meter
    }
}
