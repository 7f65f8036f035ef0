//! Seeded graph generators and random proper colorings.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Coloring, DirectedMultigraph, Edge, Vertex};

/// Restarts of the configuration model before giving up on a simple graph.
const REGULAR_RETRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    RandomRegular { n: usize, d: usize },
    /// `attempts = n * avg / 2` random pairs, kept while both ends have degree below `cap`.
    CappedErdosRenyi { n: usize, avg: f64, cap: usize },
    DisjointPaths { count: usize, len: usize },
    Star { hubs: usize, leaves: usize },
    DirectedCycle { n: usize },
    SourcesSinks { sources: usize, sinks: usize, p: f64 },
    File(PathBuf),
}

impl GraphSpec {
    /// Parses `kind:key=value,...`, e.g. `random-d-regular:n=100,d=3`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        if kind == "from-file" {
            let path = rest.strip_prefix("path=").unwrap_or(rest);
            if path.is_empty() {
                return Err(Error::InvalidParameter("from-file needs a path".into()));
            }
            return Ok(Self::File(path.into()));
        }
        let mut kv = BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got {part:?}")))?;
            kv.insert(k.trim(), v.trim());
        }
        let int = |key: &str| -> Result<usize> {
            kv.get(key)
                .ok_or_else(|| Error::InvalidParameter(format!("{kind} needs {key}")))?
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("{key} must be an integer")))
        };
        let real = |key: &str| -> Result<f64> {
            kv.get(key)
                .ok_or_else(|| Error::InvalidParameter(format!("{kind} needs {key}")))?
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("{key} must be a number")))
        };
        match kind {
            "random-d-regular" => Ok(Self::RandomRegular { n: int("n")?, d: int("d")? }),
            "erdos-renyi-capped-degree" => Ok(Self::CappedErdosRenyi {
                n: int("n")?,
                avg: real("avg")?,
                cap: int("cap")?,
            }),
            "disjoint-paths" => Ok(Self::DisjointPaths {
                count: int("count")?,
                len: int("len")?,
            }),
            "star" => Ok(Self::Star {
                hubs: int("hubs")?,
                leaves: int("leaves")?,
            }),
            "directed-cycle" => Ok(Self::DirectedCycle { n: int("n")? }),
            "bipartite-sources-sinks" => Ok(Self::SourcesSinks {
                sources: int("sources")?,
                sinks: int("sinks")?,
                p: real("p")?,
            }),
            other => Err(Error::InvalidParameter(format!("unknown generator {other:?}"))),
        }
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DirectedMultigraph> {
        match *self {
            Self::RandomRegular { n, d } => random_regular(n, d, rng),
            Self::CappedErdosRenyi { n, avg, cap } => capped_erdos_renyi(n, avg, cap, rng),
            Self::DisjointPaths { count, len } => disjoint_paths(count, len),
            Self::Star { hubs, leaves } => star(hubs, leaves),
            Self::DirectedCycle { n } => directed_cycle(n),
            Self::SourcesSinks { sources, sinks, p } => sources_sinks(sources, sinks, p, rng),
            Self::File(ref path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
                DirectedMultigraph::parse(&text)
            }
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RandomRegular { n, d } => write!(f, "random-d-regular:n={n},d={d}"),
            Self::CappedErdosRenyi { n, avg, cap } => write!(f, "erdos-renyi-capped-degree:n={n},avg={avg},cap={cap}"),
            Self::DisjointPaths { count, len } => write!(f, "disjoint-paths:count={count},len={len}"),
            Self::Star { hubs, leaves } => write!(f, "star:hubs={hubs},leaves={leaves}"),
            Self::DirectedCycle { n } => write!(f, "directed-cycle:n={n}"),
            Self::SourcesSinks { sources, sinks, p } => {
                write!(f, "bipartite-sources-sinks:sources={sources},sinks={sinks},p={p}")
            }
            Self::File(p) => write!(f, "from-file:{}", p.display()),
        }
    }
}

/// Uniformly oriented simple `d`-regular graph from the configuration model.
pub fn random_regular<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<DirectedMultigraph> {
    if !(n * d).is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("n*d = {} is odd", n * d)));
    }
    if d >= n.max(1) {
        return Err(Error::InvalidParameter(format!("degree {d} needs more than {n} vertices")));
    }
    let mut stubs: Vec<Vertex> = (1..=n as Vertex).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'retry: for _ in 0..REGULAR_RETRIES {
        stubs.shuffle(rng);
        let mut seen = HashSet::with_capacity(n * d / 2);
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue 'retry;
            }
            edges.push(if rng.random::<bool>() { (a, b) } else { (b, a) });
        }
        return DirectedMultigraph::from_edges(n, edges);
    }
    Err(Error::InvalidParameter(format!(
        "no simple {d}-regular graph on {n} vertices after {REGULAR_RETRIES} tries"
    )))
}

/// Random simple graph with every degree at most `cap`.
pub fn capped_erdos_renyi<R: Rng + ?Sized>(n: usize, avg: f64, cap: usize, rng: &mut R) -> Result<DirectedMultigraph> {
    if n < 2 || avg < 0.0 {
        return Err(Error::InvalidParameter("need n >= 2 and avg >= 0".into()));
    }
    let attempts = (n as f64 * avg / 2.0).round() as usize;
    let mut deg = vec![0usize; n + 1];
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for _ in 0..attempts {
        let a = rng.random_range(1..=n as Vertex);
        let b = rng.random_range(1..=n as Vertex);
        if a == b || deg[a as usize] >= cap || deg[b as usize] >= cap || !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        deg[a as usize] += 1;
        deg[b as usize] += 1;
        edges.push((a, b));
    }
    DirectedMultigraph::from_edges(n, edges)
}

/// `count` disjoint directed paths with `len` edges each.
pub fn disjoint_paths(count: usize, len: usize) -> Result<DirectedMultigraph> {
    let per = len + 1;
    let edges = (0..count).flat_map(|c| (1..=len).map(move |i| ((c * per + i) as Vertex, (c * per + i + 1) as Vertex)));
    DirectedMultigraph::from_edges(count * per, edges)
}

/// `hubs` disjoint stars, each hub with `leaves` out-edges.
pub fn star(hubs: usize, leaves: usize) -> Result<DirectedMultigraph> {
    let per = leaves + 1;
    let edges = (0..hubs).flat_map(|h| (2..=per).map(move |i| ((h * per + 1) as Vertex, (h * per + i) as Vertex)));
    DirectedMultigraph::from_edges(hubs * per, edges)
}

pub fn directed_cycle(n: usize) -> Result<DirectedMultigraph> {
    if n < 2 {
        return Err(Error::InvalidParameter("a cycle needs two vertices".into()));
    }
    DirectedMultigraph::from_edges(n, (1..=n as Vertex).map(|i| (i, i % n as Vertex + 1)))
}

/// Each source-to-sink edge present independently with probability `p`.
pub fn sources_sinks<R: Rng + ?Sized>(sources: usize, sinks: usize, p: f64, rng: &mut R) -> Result<DirectedMultigraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    let mut edges: Vec<Edge> = Vec::new();
    for s in 1..=sources as Vertex {
        for t in 1..=sinks as Vertex {
            if rng.random_bool(p) {
                edges.push((s, sources as Vertex + t));
            }
        }
    }
    DirectedMultigraph::from_edges(sources + sinks, edges)
}

/// A random proper coloring with at most `k` colors: randomized greedy
/// followed by min-conflicts repair. `None` when the search gives up.
pub fn random_proper_coloring<R: Rng + ?Sized>(g: &DirectedMultigraph, k: u32, rng: &mut R) -> Option<Coloring> {
    let n = g.n();
    if k == 0 {
        return None;
    }
    let nbrs: Vec<Vec<Vertex>> = (0..=n as Vertex)
        .map(|v| if v == 0 { Vec::new() } else { g.neighbors(v).collect() })
        .collect();
    let mut color = vec![0u32; n + 1];
    let mut order: Vec<Vertex> = (1..=n as Vertex).collect();
    order.shuffle(rng);
    for &v in &order {
        let used: HashSet<u32> = nbrs[v as usize].iter().map(|&w| color[w as usize]).collect();
        let free: Vec<u32> = (1..=k).filter(|c| !used.contains(c)).collect();
        color[v as usize] = match free.as_slice() {
            [] => rng.random_range(1..=k),
            f => f[rng.random_range(0..f.len())],
        };
    }
    let conflicts = |v: Vertex, c: u32, color: &[u32]| nbrs[v as usize].iter().filter(|&&w| color[w as usize] == c).count();
    let max_steps = 200 * n + 1000;
    let mut bad: Vec<Vertex> = (1..=n as Vertex).filter(|&v| conflicts(v, color[v as usize], &color) > 0).collect();
    let mut steps = 0;
    while !bad.is_empty() {
        if steps > max_steps {
            return None;
        }
        steps += 1;
        let i = rng.random_range(0..bad.len());
        let v = bad[i];
        if conflicts(v, color[v as usize], &color) == 0 {
            bad.swap_remove(i);
            continue;
        }
        let scores: Vec<usize> = (1..=k).map(|c| conflicts(v, c, &color)).collect();
        let best = *scores.iter().min().expect("k >= 1");
        let choices: Vec<u32> = (1..=k).filter(|&c| scores[c as usize - 1] == best).collect();
        // an occasional random move escapes plateaus
        color[v as usize] = if rng.random_bool(0.1) {
            rng.random_range(1..=k)
        } else {
            choices[rng.random_range(0..choices.len())]
        };
        for &w in &nbrs[v as usize] {
            if color[w as usize] == color[v as usize] {
                bad.push(w);
            }
        }
        if conflicts(v, color[v as usize], &color) > 0 {
            bad.push(v);
        }
    }
    Coloring::from_colors(k, color[1..].to_vec()).ok()
}
