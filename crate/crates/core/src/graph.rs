//! Directed multigraphs, colorings and fractional cuts.
//!
//! Vertices are dense identifiers `1..=n`. Parallel edges are stored once per
//! ordered pair together with their multiplicity, so `|E|` is the sum of the
//! multiplicities.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::hashing::PolyHash;

pub type Vertex = u32;
pub type Edge = (Vertex, Vertex);

/// Default number of non-isolated vertices the brute-force oracle accepts.
pub const DEFAULT_ORACLE_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedMultigraph {
    n: usize,
    /// Distinct ordered pairs, sorted, with multiplicity.
    edges: Vec<(Edge, u32)>,
    out_adj: Vec<Vec<(Vertex, u32)>>,
    in_adj: Vec<Vec<(Vertex, u32)>>,
    total: u64,
}

impl DirectedMultigraph {
    /// Builds a graph on `1..=n` from an edge sequence; repeated pairs add up.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = Edge>,
    {
        let mut counts: BTreeMap<Edge, u32> = BTreeMap::new();
        for (u, v) in edges {
            *counts.entry((u, v)).or_insert(0) += 1;
        }
        Self::from_multiplicities(n, counts)
    }

    pub fn from_multiplicities<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Edge, u32)>,
    {
        let mut counts: BTreeMap<Edge, u32> = BTreeMap::new();
        for ((u, v), c) in pairs {
            for w in [u, v] {
                if w == 0 || w as usize > n {
                    return Err(Error::VertexOutOfRange(w));
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if c > 0 {
                *counts.entry((u, v)).or_insert(0) += c;
            }
        }
        let mut out_adj = vec![Vec::new(); n + 1];
        let mut in_adj = vec![Vec::new(); n + 1];
        let mut total = 0u64;
        let mut edges = Vec::with_capacity(counts.len());
        for ((u, v), c) in counts {
            out_adj[u as usize].push((v, c));
            in_adj[v as usize].push((u, c));
            total += c as u64;
            edges.push(((u, v), c));
        }
        for list in in_adj.iter_mut() {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges,
            out_adj,
            in_adj,
            total,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self::from_multiplicities(n, std::iter::empty()).expect("empty graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `|E|`, counted with multiplicity.
    pub fn edge_count(&self) -> u64 {
        self.total
    }

    pub fn distinct_edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        1..=self.n as Vertex
    }

    /// Distinct ordered pairs with their multiplicities, sorted.
    pub fn edges(&self) -> &[(Edge, u32)] {
        &self.edges
    }

    /// Every edge, repeated according to its multiplicity.
    pub fn edge_sequence(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges
            .iter()
            .flat_map(|&(e, c)| std::iter::repeat_n(e, c as usize))
    }

    pub fn multiplicity(&self, u: Vertex, v: Vertex) -> u32 {
        match self.out_adj.get(u as usize) {
            Some(list) => list
                .binary_search_by_key(&v, |&(w, _)| w)
                .map(|i| list[i].1)
                .unwrap_or(0),
            None => 0,
        }
    }

    pub fn out_neighbors(&self, v: Vertex) -> &[(Vertex, u32)] {
        &self.out_adj[v as usize]
    }

    pub fn in_neighbors(&self, v: Vertex) -> &[(Vertex, u32)] {
        &self.in_adj[v as usize]
    }

    pub fn in_degree(&self, v: Vertex) -> u64 {
        self.in_adj[v as usize].iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn out_degree(&self, v: Vertex) -> u64 {
        self.out_adj[v as usize].iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn degree(&self, v: Vertex) -> u64 {
        self.in_degree(v) + self.out_degree(v)
    }

    pub fn max_degree(&self) -> u64 {
        self.vertices().map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn is_isolated(&self, v: Vertex) -> bool {
        self.out_adj[v as usize].is_empty() && self.in_adj[v as usize].is_empty()
    }

    /// Undirected neighbors of `v` (each distinct neighbor once).
    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.out_adj[v as usize]
            .iter()
            .chain(self.in_adj[v as usize].iter())
            .map(|&(w, _)| w)
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v == 0 || v as usize > self.n {
            Err(Error::VertexOutOfRange(v))
        } else {
            Ok(())
        }
    }

    /// Parses the text format: a header `n m` followed by `m` lines `u v`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let nums = parse_pair(header, hl + 1)?;
        let (n, m) = (nums.0 as usize, nums.1 as usize);
        let mut edges = Vec::with_capacity(m);
        for (i, line) in lines {
            edges.push(parse_pair(line, i + 1)?);
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Self::from_edges(n, edges)
    }

    /// Serializes to the text format. Edges are emitted in sorted order with
    /// repetition, so `parse(to_text(g)) == g` and the output is canonical.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.total);
        for (u, v) in self.edge_sequence() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(u32, u32)> {
    let mut it = line.split_whitespace().map(|t| t.parse::<u32>());
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(Error::Parse {
            line: lineno,
            msg: format!("expected two integers, got {line:?}"),
        }),
    }
}

/// Where the colors come from: a materialized table or a hash evaluated on demand.
#[derive(Debug, Clone, PartialEq)]
enum ColorSource {
    Table(Vec<u32>),
    Hash(PolyHash),
}

/// A map from vertices to colors in `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coloring {
    k: u32,
    source: ColorSource,
}

impl Coloring {
    /// `colors[i]` is the color of vertex `i + 1`.
    pub fn from_colors(k: u32, colors: Vec<u32>) -> Result<Self> {
        if let Some(&c) = colors.iter().find(|&&c| c == 0 || c > k) {
            return Err(Error::InvalidParameter(format!(
                "color {c} outside 1..={k}"
            )));
        }
        let mut table = Vec::with_capacity(colors.len() + 1);
        table.push(0);
        table.extend(colors);
        Ok(Self {
            k,
            source: ColorSource::Table(table),
        })
    }

    /// Colors are `1 + hash(v)`; only the hash coefficients are stored.
    pub fn from_hash(hash: PolyHash) -> Self {
        Self {
            k: hash.range() as u32,
            source: ColorSource::Hash(hash),
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn color(&self, v: Vertex) -> u32 {
        match &self.source {
            ColorSource::Table(t) => t[v as usize],
            ColorSource::Hash(h) => 1 + h.eval(v as u64) as u32,
        }
    }

    pub fn is_hash_backed(&self) -> bool {
        matches!(self.source, ColorSource::Hash(_))
    }

    /// Machine words held by the coloring itself.
    pub fn words(&self) -> usize {
        match &self.source {
            ColorSource::Table(t) => t.len(),
            ColorSource::Hash(h) => h.words(),
        }
    }

    /// Words charged to a streaming algorithm holding this coloring. A table
    /// is supplied input (an oracle, like the stream itself); a hash is state.
    pub fn state_words(&self) -> usize {
        match &self.source {
            ColorSource::Table(_) => 0,
            ColorSource::Hash(h) => h.words(),
        }
    }

    pub fn is_proper(&self, g: &DirectedMultigraph) -> bool {
        self.first_conflict(g).is_none()
    }

    pub fn first_conflict(&self, g: &DirectedMultigraph) -> Option<Edge> {
        g.edges()
            .iter()
            .map(|&(e, _)| e)
            .find(|&(u, v)| self.color(u) == self.color(v))
    }

    pub fn check_proper(&self, g: &DirectedMultigraph) -> Result<()> {
        match self.first_conflict(g) {
            Some((u, v)) => Err(Error::ImproperColoring(u, v)),
            None => Ok(()),
        }
    }

    /// Coloring of a relabeled subgraph whose vertex `i + 1` was `labels[i]`.
    pub fn restrict(&self, labels: &[Vertex]) -> Coloring {
        Coloring {
            k: self.k,
            source: ColorSource::Table(
                std::iter::once(0)
                    .chain(labels.iter().map(|&v| self.color(v)))
                    .collect(),
            ),
        }
    }
}

/// A fractional assignment `x : V -> [0, 1]`, indexed by vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalCut<S = f64> {
    values: Vec<S>,
}

impl<S: Clone> FractionalCut<S> {
    pub fn constant(n: usize, value: S) -> Self {
        Self {
            values: vec![value; n + 1],
        }
    }

    /// `values[i]` is the value of vertex `i + 1`.
    pub fn from_values(values: Vec<S>) -> Self
    where
        S: Zero,
    {
        let mut v = Vec::with_capacity(values.len() + 1);
        v.push(S::zero());
        v.extend(values);
        Self { values: v }
    }

    pub fn get(&self, v: Vertex) -> &S {
        &self.values[v as usize]
    }

    pub fn set(&mut self, v: Vertex, value: S) {
        self.values[v as usize] = value;
    }

    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fraction of edges `(u, v)` satisfied by `x`, i.e. the mean of `x(u)(1 - x(v))`.
pub fn dicut_value<S>(g: &DirectedMultigraph, x: &FractionalCut<S>) -> Result<S>
where
    S: Clone + num_traits::Num + num_traits::FromPrimitive,
{
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if x.len() < g.n() {
        return Err(Error::InvalidParameter(format!(
            "assignment covers {} of {} vertices",
            x.len(),
            g.n()
        )));
    }
    let mut sum = S::zero();
    for &((u, v), c) in g.edges() {
        let term = x.get(u).clone() * (S::one() - x.get(v).clone());
        sum = sum + term * S::from_u32(c).expect("multiplicity fits");
    }
    Ok(sum / S::from_u64(g.edge_count()).expect("edge count fits"))
}

/// Exact `maxval(G)` by enumerating Boolean assignments of the non-isolated
/// vertices in Gray-code order.
pub fn maxval_bruteforce(g: &DirectedMultigraph, cap: usize) -> Result<BigRational> {
    let (best, total) = max_satisfied(g, cap)?;
    Ok(BigRational::new(BigInt::from(best), BigInt::from(total)))
}

/// Maximum number of satisfied edges (with multiplicity) and `|E|`.
pub fn max_satisfied(g: &DirectedMultigraph, cap: usize) -> Result<(u64, u64)> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let active: Vec<Vertex> = g.vertices().filter(|&v| !g.is_isolated(v)).collect();
    if active.len() > cap {
        return Err(Error::CapExceeded {
            what: "non-isolated vertices for brute force",
            value: active.len(),
            cap,
        });
    }
    let mut index = vec![usize::MAX; g.n() + 1];
    for (i, &v) in active.iter().enumerate() {
        index[v as usize] = i;
    }
    // Start from the all-zero assignment (nothing satisfied) and flip one bit
    // per step; each flip touches only the flipped vertex's edges.
    let mut x = vec![false; active.len()];
    let mut sat: i64 = 0;
    let mut best: i64 = 0;
    let steps: u64 = 1u64 << active.len();
    for step in 1..steps {
        let bit = step.trailing_zeros() as usize;
        let w = active[bit];
        let before = x[bit];
        let mut delta: i64 = 0;
        // Edges w -> y are satisfied iff x(w)=1 and x(y)=0.
        for &(y, c) in g.out_neighbors(w) {
            if !x[index[y as usize]] {
                delta += if before { -(c as i64) } else { c as i64 };
            }
        }
        // Edges y -> w are satisfied iff x(y)=1 and x(w)=0.
        for &(y, c) in g.in_neighbors(w) {
            if x[index[y as usize]] {
                delta += if before { c as i64 } else { -(c as i64) };
            }
        }
        x[bit] = !before;
        sat += delta;
        best = best.max(sat);
    }
    Ok((best as u64, g.edge_count()))
}

/// Undirected distances from the seed set, truncated at `ell`.
pub fn ball_distances(g: &DirectedMultigraph, ell: u32, seeds: &[Vertex]) -> BTreeMap<Vertex, u32> {
    let mut dist = BTreeMap::new();
    let mut queue = VecDeque::new();
    for &s in seeds {
        if dist.insert(s, 0).is_none() {
            queue.push_back(s);
        }
    }
    while let Some(w) = queue.pop_front() {
        let d = dist[&w];
        if d == ell {
            continue;
        }
        for y in g.neighbors(w) {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(y) {
                e.insert(d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Vertices within undirected distance `ell` of any seed (a vertex or both
/// endpoints of an edge), sorted.
pub fn ball(g: &DirectedMultigraph, ell: u32, seeds: &[Vertex]) -> Result<Vec<Vertex>> {
    for &s in seeds {
        g.check_vertex(s)?;
    }
    Ok(ball_distances(g, ell, seeds).into_keys().collect())
}

/// An induced subgraph relabeled onto `1..=|S|`, remembering the original ids.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedSubgraph {
    pub graph: DirectedMultigraph,
    /// `labels[i]` is the original id of vertex `i + 1`; sorted ascending.
    pub labels: Vec<Vertex>,
}

impl InducedSubgraph {
    pub fn original(&self, v: Vertex) -> Vertex {
        self.labels[v as usize - 1]
    }

    pub fn local(&self, original: Vertex) -> Option<Vertex> {
        self.labels
            .binary_search(&original)
            .ok()
            .map(|i| i as Vertex + 1)
    }

    /// Edges in original ids, with multiplicity.
    pub fn original_edges(&self) -> Vec<(Edge, u32)> {
        let mut out: Vec<_> = self
            .graph
            .edges()
            .iter()
            .map(|&((u, v), c)| ((self.original(u), self.original(v)), c))
            .collect();
        out.sort_unstable();
        out
    }
}

/// `G[S]`: the vertices of `S` and every edge of `G` with both endpoints in
/// `S`, multiplicities preserved.
pub fn induced_subgraph(g: &DirectedMultigraph, s: &[Vertex]) -> Result<InducedSubgraph> {
    let mut labels = s.to_vec();
    labels.sort_unstable();
    labels.dedup();
    for &v in &labels {
        g.check_vertex(v)?;
    }
    let mut pairs = Vec::new();
    for (i, &u) in labels.iter().enumerate() {
        for &(v, c) in g.out_neighbors(u) {
            if let Ok(j) = labels.binary_search(&v) {
                pairs.push(((i as Vertex + 1, j as Vertex + 1), c));
            }
        }
    }
    let graph = DirectedMultigraph::from_multiplicities(labels.len(), pairs)?;
    Ok(InducedSubgraph { graph, labels })
}

/// The four parts of the edges at a vertex, split by direction and by whether
/// the other endpoint has a lower or higher color.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgePartition {
    pub in_lo: Vec<(Edge, u32)>,
    pub out_lo: Vec<(Edge, u32)>,
    pub in_hi: Vec<(Edge, u32)>,
    pub out_hi: Vec<(Edge, u32)>,
}

impl EdgePartition {
    pub fn sizes(&self) -> [u64; 4] {
        let size = |p: &[(Edge, u32)]| p.iter().map(|&(_, c)| c as u64).sum::<u64>();
        [
            size(&self.in_lo),
            size(&self.out_lo),
            size(&self.in_hi),
            size(&self.out_hi),
        ]
    }
}

pub fn edge_partition(g: &DirectedMultigraph, chi: &Coloring, v: Vertex) -> Result<EdgePartition> {
    g.check_vertex(v)?;
    let cv = chi.color(v);
    let mut p = EdgePartition::default();
    for &(u, c) in g.in_neighbors(v) {
        let cu = chi.color(u);
        match cu.cmp(&cv) {
            std::cmp::Ordering::Less => p.in_lo.push(((u, v), c)),
            std::cmp::Ordering::Greater => p.in_hi.push(((u, v), c)),
            std::cmp::Ordering::Equal => return Err(Error::ImproperColoring(u, v)),
        }
    }
    for &(u, c) in g.out_neighbors(v) {
        let cu = chi.color(u);
        match cu.cmp(&cv) {
            std::cmp::Ordering::Less => p.out_lo.push(((v, u), c)),
            std::cmp::Ordering::Greater => p.out_hi.push(((v, u), c)),
            std::cmp::Ordering::Equal => return Err(Error::ImproperColoring(v, u)),
        }
    }
    Ok(p)
}

/// Exact rational `val(G, x)` for a Boolean assignment given as a bitmask over
/// vertices `1..=n` (bit `v - 1`).
pub fn boolean_value(g: &DirectedMultigraph, mask: u64) -> Result<BigRational> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let bit = |v: Vertex| (mask >> (v - 1)) & 1 == 1;
    let sat: u64 = g
        .edges()
        .iter()
        .filter(|&&((u, v), _)| bit(u) && !bit(v))
        .map(|&(_, c)| c as u64)
        .sum();
    Ok(BigRational::new(sat.into(), g.edge_count().into()))
}
