//! Isomorphism classes of doubly-rooted colored graphs.
//!
//! A [`RootedType`] is a canonical byte encoding: two rooted graphs get the
//! same encoding iff some bijection maps one onto the other preserving edge
//! multiplicities, colors (exactly, never permuted) and the ordered root edge.
//!
//! The canonical labeling fixes the root source at position 0 and the root
//! sink at position 1, splits the remaining vertices into cells by an
//! isomorphism-invariant refinement and then picks, by branch and bound, the
//! labeling whose adjacency matrix is lexicographically smallest in shell
//! order.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ball, induced_subgraph, Coloring, DirectedMultigraph, Edge, Vertex};

/// Default bound on the vertex count of a rooted graph to canonicalize.
pub const DEFAULT_VERTEX_CAP: usize = 64;

/// Bound on search-tree leaves during canonical labeling.
const SEARCH_LEAF_CAP: usize = 5_000_000;

/// A rooted, properly colored graph: the representative of a type.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublyRootedColoredGraph {
    pub graph: DirectedMultigraph,
    pub coloring: Coloring,
    pub root: Edge,
}

impl DoublyRootedColoredGraph {
    pub fn new(graph: DirectedMultigraph, coloring: Coloring, root: Edge) -> Result<Self> {
        if graph.multiplicity(root.0, root.1) == 0 {
            return Err(Error::MissingEdge(root.0, root.1));
        }
        coloring.check_proper(&graph)?;
        Ok(Self {
            graph,
            coloring,
            root,
        })
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootedType {
    canon: Arc<[u8]>,
    vertices: u32,
    edges: u32,
}

impl RootedType {
    fn from_encoding(canon: Vec<u8>) -> Result<Self> {
        let decoded = Decoded::parse(&canon)?;
        Ok(Self {
            vertices: decoded.colors.len() as u32,
            edges: decoded.edges.iter().map(|e| e.2).sum(),
            canon: canon.into(),
        })
    }

    /// Number of vertices of the class.
    pub fn vertex_count(&self) -> usize {
        self.vertices as usize
    }

    /// Number of edges, with multiplicity.
    pub fn edge_count(&self) -> usize {
        self.edges as usize
    }

    pub fn encoding(&self) -> &[u8] {
        &self.canon
    }

    pub fn to_hex(&self) -> String {
        self.canon.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(hex: &str) -> Result<Self> {
        if !hex.len().is_multiple_of(2) {
            return Err(Error::MalformedType);
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| Error::MalformedType))
            .collect::<Result<Vec<u8>>>()?;
        Self::from_encoding(bytes)
    }

    /// Canonical representative on vertices `1..=a`, rooted at `(1, 2)`.
    pub fn representative(&self) -> DoublyRootedColoredGraph {
        let d = Decoded::parse(&self.canon).expect("validated at construction");
        let graph = DirectedMultigraph::from_multiplicities(
            d.colors.len(),
            d.edges.iter().map(|&(u, v, c)| ((u + 1, v + 1), c)),
        )
        .expect("canonical edges are valid");
        let coloring = Coloring::from_colors(d.k, d.colors).expect("canonical colors are valid");
        DoublyRootedColoredGraph {
            graph,
            coloring,
            root: (1, 2),
        }
    }

    /// Sort key giving a linear extension of the subtype order.
    pub fn size_key(&self) -> (u32, u32, &[u8]) {
        (self.edges, self.vertices, &self.canon)
    }
}

impl fmt::Debug for RootedType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RootedType(a={}, m={}, {})", self.vertices, self.edges, self.to_hex())
    }
}

impl Serialize for RootedType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for RootedType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let hex = String::deserialize(d)?;
        RootedType::from_hex(&hex).map_err(serde::de::Error::custom)
    }
}

/// Encoding layout (big-endian `u32`s): `a, k, colors[a], #distinct edges,
/// (u, v, mult)*` with positions 0-based and edges sorted.
struct Decoded {
    k: u32,
    colors: Vec<u32>,
    edges: Vec<(u32, u32, u32)>,
}

impl Decoded {
    fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * (3 + self.colors.len() + 3 * self.edges.len()));
        let mut push = |x: u32| out.extend_from_slice(&x.to_be_bytes());
        push(self.colors.len() as u32);
        push(self.k);
        for &c in &self.colors {
            push(c);
        }
        push(self.edges.len() as u32);
        for &(u, v, c) in &self.edges {
            push(u);
            push(v);
            push(c);
        }
        out
    }

    fn parse(bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(4) {
            return Err(Error::MalformedType);
        }
        let words: Vec<u32> = bytes
            .chunks_exact(4)
            .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let a = *words.first().ok_or(Error::MalformedType)? as usize;
        if a < 2 || words.len() < 3 + a {
            return Err(Error::MalformedType);
        }
        let k = words[1];
        let colors = words[2..2 + a].to_vec();
        let m = words[2 + a] as usize;
        let rest = &words[3 + a..];
        if rest.len() != 3 * m {
            return Err(Error::MalformedType);
        }
        let edges: Vec<_> = rest.chunks_exact(3).map(|c| (c[0], c[1], c[2])).collect();
        let valid = colors.iter().all(|&c| c >= 1 && c <= k)
            && edges.iter().all(|&(u, v, c)| {
                (u as usize) < a && (v as usize) < a && u != v && c > 0 && colors[u as usize] != colors[v as usize]
            })
            && edges.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1))
            && edges.iter().any(|&(u, v, _)| u == 0 && v == 1);
        if !valid {
            return Err(Error::MalformedType);
        }
        Ok(Self { k, colors, edges })
    }
}

/// Canonical type of a rooted colored graph.
pub fn canonicalize(drg: &DoublyRootedColoredGraph) -> Result<RootedType> {
    canonicalize_with_cap(drg, DEFAULT_VERTEX_CAP)
}

pub fn canonicalize_with_cap(drg: &DoublyRootedColoredGraph, cap: usize) -> Result<RootedType> {
    let g = &drg.graph;
    let n = g.n();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "vertices in rooted graph",
            value: n,
            cap,
        });
    }
    let (r, s) = drg.root;
    g.check_vertex(r)?;
    g.check_vertex(s)?;
    if g.multiplicity(r, s) == 0 {
        return Err(Error::MissingEdge(r, s));
    }
    let colors: Vec<u32> = (0..=n as Vertex)
        .map(|v| if v == 0 { 0 } else { drg.coloring.color(v) })
        .collect();
    for &((u, v), _) in g.edges() {
        if colors[u as usize] == colors[v as usize] {
            return Err(Error::ImproperColoring(u, v));
        }
    }

    let cells = refine_cells(g, &colors, r, s);
    let twins = twin_table(g, &cells);
    let mut search = LabelSearch::new(g, cells, twins);
    search.run()?;
    let order = search.best_order.expect("search visits at least one leaf");

    let mut pos = vec![0u32; n + 1];
    for (i, &v) in order.iter().enumerate() {
        pos[v as usize] = i as u32;
    }
    let mut edges: Vec<(u32, u32, u32)> = g
        .edges()
        .iter()
        .map(|&((u, v), c)| (pos[u as usize], pos[v as usize], c))
        .collect();
    edges.sort_unstable();
    let decoded = Decoded {
        k: drg.coloring.k(),
        colors: order.iter().map(|&v| colors[v as usize]).collect(),
        edges,
    };
    RootedType::from_encoding(decoded.encode())
}

fn bfs_all(g: &DirectedMultigraph, src: Vertex) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.n() + 1];
    dist[src as usize] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(w) = q.pop_front() {
        let d = dist[w as usize];
        for y in g.neighbors(w) {
            if dist[y as usize] == u32::MAX {
                dist[y as usize] = d + 1;
                q.push_back(y);
            }
        }
    }
    dist
}

/// Ordered cells of an equitable-style refinement; the first two cells are
/// the singleton roots.
fn refine_cells(g: &DirectedMultigraph, colors: &[u32], r: Vertex, s: Vertex) -> Vec<Vec<Vertex>> {
    let n = g.n();
    let dr = bfs_all(g, r);
    let ds = bfs_all(g, s);
    let initial: Vec<(u32, u32, u32, u32, u64, u64)> = (1..=n as Vertex)
        .map(|v| {
            let role = if v == r {
                0
            } else if v == s {
                1
            } else {
                2
            };
            let i = v as usize;
            (role, dr[i], ds[i], colors[i], g.in_degree(v), g.out_degree(v))
        })
        .collect();
    let mut rank = dense_rank(&initial);
    let mut classes = rank.iter().max().map_or(0, |&m| m + 1);
    loop {
        let keys: Vec<(u32, Vec<(u32, u32)>, Vec<(u32, u32)>)> = (1..=n as Vertex)
            .map(|v| {
                let mut outs: Vec<(u32, u32)> = g
                    .out_neighbors(v)
                    .iter()
                    .map(|&(w, c)| (rank[w as usize - 1], c))
                    .collect();
                let mut ins: Vec<(u32, u32)> = g
                    .in_neighbors(v)
                    .iter()
                    .map(|&(w, c)| (rank[w as usize - 1], c))
                    .collect();
                outs.sort_unstable();
                ins.sort_unstable();
                (rank[v as usize - 1], outs, ins)
            })
            .collect();
        let next = dense_rank(&keys);
        let next_classes = next.iter().max().map_or(0, |&m| m + 1);
        rank = next;
        if next_classes == classes {
            break;
        }
        classes = next_classes;
    }
    let mut cells = vec![Vec::new(); classes as usize];
    for v in 1..=n as Vertex {
        cells[rank[v as usize - 1] as usize].push(v);
    }
    cells
}

fn dense_rank<K: Ord + Clone>(keys: &[K]) -> Vec<u32> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present") as u32)
        .collect()
}

/// `twin[v]` lists the smaller vertices of `v`'s cell that can be swapped
/// with `v` by an automorphism fixing everything else.
fn twin_table(g: &DirectedMultigraph, cells: &[Vec<Vertex>]) -> Vec<Vec<Vertex>> {
    let mut twin = vec![Vec::new(); g.n() + 1];
    for cell in cells {
        for (i, &v) in cell.iter().enumerate() {
            for &u in &cell[..i] {
                if are_twins(g, u, v) {
                    twin[v as usize].push(u);
                }
            }
        }
    }
    twin
}

fn are_twins(g: &DirectedMultigraph, u: Vertex, v: Vertex) -> bool {
    if g.multiplicity(u, v) != g.multiplicity(v, u) {
        return false;
    }
    let strip = |list: &[(Vertex, u32)]| -> Vec<(Vertex, u32)> {
        list.iter().copied().filter(|&(w, _)| w != u && w != v).collect()
    };
    strip(g.out_neighbors(u)) == strip(g.out_neighbors(v))
        && strip(g.in_neighbors(u)) == strip(g.in_neighbors(v))
}

struct LabelSearch<'a> {
    g: &'a DirectedMultigraph,
    /// Cell index for every position.
    slots: Vec<usize>,
    cells: Vec<Vec<Vertex>>,
    twins: Vec<Vec<Vertex>>,
    used: Vec<bool>,
    order: Vec<Vertex>,
    code: Vec<u32>,
    best_code: Option<Vec<u32>>,
    best_order: Option<Vec<Vertex>>,
    leaves: usize,
}

impl<'a> LabelSearch<'a> {
    fn new(g: &'a DirectedMultigraph, cells: Vec<Vec<Vertex>>, twins: Vec<Vec<Vertex>>) -> Self {
        let slots = cells
            .iter()
            .enumerate()
            .flat_map(|(i, c)| std::iter::repeat_n(i, c.len()))
            .collect();
        Self {
            g,
            slots,
            cells,
            twins,
            used: vec![false; g.n() + 1],
            order: Vec::with_capacity(g.n()),
            code: Vec::new(),
            best_code: None,
            best_order: None,
            leaves: 0,
        }
    }

    fn run(&mut self) -> Result<()> {
        self.descend(false)
    }

    /// `below` is true once the current prefix is strictly smaller than the
    /// best code's prefix.
    fn descend(&mut self, below: bool) -> Result<()> {
        let p = self.order.len();
        if p == self.slots.len() {
            self.leaves += 1;
            if self.leaves > SEARCH_LEAF_CAP {
                return Err(Error::CapExceeded {
                    what: "canonical labeling search leaves",
                    value: self.leaves,
                    cap: SEARCH_LEAF_CAP,
                });
            }
            if below || self.best_code.is_none() {
                self.best_code = Some(self.code.clone());
                self.best_order = Some(self.order.clone());
            }
            return Ok(());
        }
        let cell = self.slots[p];
        for idx in 0..self.cells[cell].len() {
            let v = self.cells[cell][idx];
            if self.used[v as usize] {
                continue;
            }
            if self.twins[v as usize].iter().any(|&u| !self.used[u as usize]) {
                continue;
            }
            let start = self.code.len();
            for i in 0..p {
                let w = self.order[i];
                self.code.push(self.g.multiplicity(v, w));
                self.code.push(self.g.multiplicity(w, v));
            }
            let mut now_below = below;
            let mut prune = false;
            if !below {
                if let Some(best) = &self.best_code {
                    match self.code[start..].cmp(&best[start..self.code.len()]) {
                        std::cmp::Ordering::Less => now_below = true,
                        std::cmp::Ordering::Greater => prune = true,
                        std::cmp::Ordering::Equal => {}
                    }
                }
            }
            if !prune {
                self.used[v as usize] = true;
                self.order.push(v);
                let res = self.descend(now_below);
                self.order.pop();
                self.used[v as usize] = false;
                res?;
            }
            self.code.truncate(start);
        }
        Ok(())
    }
}

/// Radius-`ell` neighborhood type of edge `e`: the type of the subgraph
/// induced on the radius-`ell` ball around both endpoints, rooted at `e`.
pub fn nbrtype(g: &DirectedMultigraph, chi: &Coloring, ell: u32, e: Edge) -> Result<RootedType> {
    let (u, v) = e;
    g.check_vertex(u)?;
    g.check_vertex(v)?;
    if g.multiplicity(u, v) == 0 {
        return Err(Error::MissingEdge(u, v));
    }
    let nodes = ball(g, ell, &[u, v])?;
    let sub = induced_subgraph(g, &nodes)?;
    let root = (
        sub.local(u).expect("root in ball"),
        sub.local(v).expect("root in ball"),
    );
    let drg = DoublyRootedColoredGraph::new(sub.graph.clone(), chi.restrict(&sub.labels), root)?;
    canonicalize(&drg)
}

/// A probability vector over rooted types.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeDistribution {
    weights: BTreeMap<RootedType, f64>,
}

impl TypeDistribution {
    pub fn from_weights(weights: BTreeMap<RootedType, f64>) -> Self {
        Self { weights }
    }

    pub fn point_mass(t: RootedType) -> Self {
        Self {
            weights: BTreeMap::from([(t, 1.0)]),
        }
    }

    /// Normalized counts.
    pub fn from_counts<C: Into<f64> + Copy>(counts: &BTreeMap<RootedType, C>) -> Result<Self> {
        let total: f64 = counts.values().map(|&c| c.into()).sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(Self {
            weights: counts
                .iter()
                .map(|(t, &c)| (t.clone(), c.into() / total))
                .collect(),
        })
    }

    /// Empirical distribution of a sample.
    pub fn empirical<'a, I: IntoIterator<Item = &'a RootedType>>(samples: I) -> Result<Self> {
        let mut counts: BTreeMap<RootedType, f64> = BTreeMap::new();
        for t in samples {
            *counts.entry(t.clone()).or_insert(0.0) += 1.0;
        }
        Self::from_counts(&counts)
    }

    pub fn weight(&self, t: &RootedType) -> f64 {
        self.weights.get(t).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RootedType, f64)> {
        self.weights.iter().map(|(t, &w)| (t, w))
    }

    pub fn support(&self) -> impl Iterator<Item = &RootedType> {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn as_map(&self) -> &BTreeMap<RootedType, f64> {
        &self.weights
    }

    /// `E[f(T)]` under this distribution.
    pub fn expectation<F: FnMut(&RootedType) -> f64>(&self, mut f: F) -> f64 {
        self.weights.iter().map(|(t, &w)| w * f(t)).sum()
    }
}

/// Number of edges (with multiplicity) of each radius-`ell` type.
pub fn edge_type_counts(g: &DirectedMultigraph, chi: &Coloring, ell: u32) -> Result<BTreeMap<RootedType, u64>> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    chi.check_proper(g)?;
    let mut counts = BTreeMap::new();
    for &(e, c) in g.edges() {
        *counts.entry(nbrtype(g, chi, ell, e)?).or_insert(0) += c as u64;
    }
    Ok(counts)
}

/// Exact distribution of the radius-`ell` type of a uniformly random edge.
pub fn edge_type_distribution(g: &DirectedMultigraph, chi: &Coloring, ell: u32) -> Result<TypeDistribution> {
    let counts = edge_type_counts(g, chi, ell)?;
    let counts: BTreeMap<RootedType, f64> = counts.into_iter().map(|(t, c)| (t, c as f64)).collect();
    TypeDistribution::from_counts(&counts)
}

/// Whether `small` embeds into `large` as a root- and color-preserving
/// subgraph (not necessarily induced), multiplicities bounded pointwise.
pub fn is_subtype(small: &RootedType, large: &RootedType) -> bool {
    if small == large {
        return true;
    }
    if small.vertex_count() > large.vertex_count() || small.edge_count() > large.edge_count() {
        return false;
    }
    let a = small.representative();
    let b = large.representative();
    if a.coloring.k() != b.coloring.k() {
        return false;
    }
    let na = a.graph.n();
    let mut map = vec![0 as Vertex; na + 1];
    let mut used = vec![false; b.graph.n() + 1];
    // Roots are positions 1 and 2 in both representatives.
    if a.coloring.color(1) != b.coloring.color(1) || a.coloring.color(2) != b.coloring.color(2) {
        return false;
    }
    map[1] = 1;
    map[2] = 2;
    used[1] = true;
    used[2] = true;
    if a.graph.multiplicity(1, 2) > b.graph.multiplicity(1, 2)
        || a.graph.multiplicity(2, 1) > b.graph.multiplicity(2, 1)
    {
        return false;
    }
    embed(&a, &b, 3, &mut map, &mut used)
}

fn embed(
    a: &DoublyRootedColoredGraph,
    b: &DoublyRootedColoredGraph,
    x: Vertex,
    map: &mut [Vertex],
    used: &mut [bool],
) -> bool {
    if x as usize > a.graph.n() {
        return true;
    }
    let cx = a.coloring.color(x);
    for y in 1..=b.graph.n() as Vertex {
        if used[y as usize] || b.coloring.color(y) != cx {
            continue;
        }
        let fits = (1..x).all(|z| {
            let fz = map[z as usize];
            a.graph.multiplicity(x, z) <= b.graph.multiplicity(y, fz)
                && a.graph.multiplicity(z, x) <= b.graph.multiplicity(fz, y)
        });
        if !fits {
            continue;
        }
        map[x as usize] = y;
        used[y as usize] = true;
        if embed(a, b, x + 1, map, used) {
            return true;
        }
        used[y as usize] = false;
    }
    false
}

/// Memoizes canonicalization of visible or induced subgraphs keyed by the
/// graph's relabeled edge list; safe to share behind a lock.
#[derive(Debug, Default)]
pub struct TypeCache {
    map: HashMap<Vec<u8>, RootedType>,
}

impl TypeCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn canonicalize(&mut self, drg: &DoublyRootedColoredGraph) -> Result<RootedType> {
        let key = raw_key(drg);
        if let Some(t) = self.map.get(&key) {
            return Ok(t.clone());
        }
        let t = canonicalize(drg)?;
        self.map.insert(key, t.clone());
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

fn raw_key(drg: &DoublyRootedColoredGraph) -> Vec<u8> {
    let n = drg.graph.n() as Vertex;
    let colors: Vec<u32> = (1..=n).map(|v| drg.coloring.color(v)).collect();
    let decoded = Decoded {
        k: drg.coloring.k(),
        colors,
        edges: drg
            .graph
            .edges()
            .iter()
            .map(|&((u, v), c)| (u, v, c))
            .collect(),
    };
    let mut key = decoded.encode();
    key.extend_from_slice(&drg.root.0.to_be_bytes());
    key.extend_from_slice(&drg.root.1.to_be_bytes());
    key
}
