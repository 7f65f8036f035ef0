//! Single-pass edge-type distribution estimator for adversarially ordered
//! streams of bounded-degree graphs.
//!
//! For every guess `2^b` of the edge count and every ball size `a`, a
//! collector keeps the vertices a `2a`-wise independent hash selects, their
//! true degrees and the edges between them. Once the stream ends, the guess
//! `b = floor(log2 m)` is used; an edge counts toward its type only if every
//! vertex in its radius-`(ell - 1)` ball has its true degree inside the
//! sample, which certifies the sampled ball equals the real one.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ball_distances, Coloring, DirectedMultigraph, Edge, Vertex};
use crate::hashing::{sample_hash, PolyHash};
use crate::stream::{fix_normalization, SpaceMeter, StreamAlgorithm};
use crate::types::{nbrtype, RootedType, TypeDistribution};

/// Floor on the per-collector vertex budget.
pub const MIN_SPACE_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdvParams {
    /// Degree bound.
    pub d: u32,
    pub ell: u32,
    pub eps: f64,
    pub delta: f64,
}

impl AdvParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidParameter("degree bound must be positive".into()));
        }
        if !(self.eps > 0.0 && self.delta > 0.0) {
            return Err(Error::InvalidParameter("eps and delta must be positive".into()));
        }
        Ok(())
    }

    /// Dependency bound `2 D^(2 ell + 4)`.
    pub fn dependency_bound(&self) -> f64 {
        2.0 * (self.d as f64).powi(2 * self.ell as i32 + 4)
    }

    /// Largest vertex count of a radius-`ell` edge ball in a `d`-bounded graph.
    pub fn max_ball_size(&self) -> usize {
        let branch = self.d.saturating_sub(1) as usize;
        let mut total = 0usize;
        let mut layer = 1usize;
        for _ in 0..=self.ell {
            total = total.saturating_add(layer);
            layer = layer.saturating_mul(branch);
        }
        total.saturating_mul(2).max(2)
    }

    /// `(eps^2 delta 2^b / (2 D Delta))^(1/a)`.
    pub fn scale(&self, b: u32, a: usize) -> f64 {
        let base = self.eps * self.eps * self.delta * 2f64.powi(b as i32)
            / (2.0 * self.d as f64 * self.dependency_bound());
        base.powf(1.0 / a as f64)
    }
}

/// A sampled vertex set with true degrees and the induced edge multiset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InducedSample {
    pub degs: HashMap<Vertex, u64>,
    pub edges: HashMap<Edge, u32>,
}

impl InducedSample {
    /// The sample a collector would hold for `s` after reading all of `g`.
    pub fn from_graph(g: &DirectedMultigraph, s: &[Vertex]) -> Self {
        let set: std::collections::HashSet<Vertex> = s.iter().copied().collect();
        let degs = s
            .iter()
            .filter(|&&v| g.degree(v) > 0)
            .map(|&v| (v, g.degree(v)))
            .collect();
        let edges = g
            .edges()
            .iter()
            .filter(|&&((u, v), _)| set.contains(&u) && set.contains(&v))
            .map(|&(e, c)| (e, c))
            .collect();
        Self { degs, edges }
    }

    fn words(&self) -> usize {
        2 * self.degs.len() + 3 * self.edges.len()
    }
}

/// Edges of `sample` whose certified type can be read off the sample,
/// as `(edge, multiplicity, type)` in original labels.
pub fn accepted_types(sample: &InducedSample, chi: &Coloring, ell: u32) -> Result<Vec<(Edge, u32, RootedType)>> {
    if sample.edges.is_empty() {
        return Ok(Vec::new());
    }
    let mut labels: Vec<Vertex> = sample.degs.keys().copied().collect();
    for &(u, v) in sample.edges.keys() {
        labels.push(u);
        labels.push(v);
    }
    labels.sort_unstable();
    labels.dedup();
    let local = |v: Vertex| labels.binary_search(&v).expect("labelled") as Vertex + 1;
    let mut pairs: Vec<(Edge, u32)> = sample.edges.iter().map(|(&(u, v), &c)| ((local(u), local(v)), c)).collect();
    pairs.sort_unstable();
    let h = DirectedMultigraph::from_multiplicities(labels.len(), pairs.iter().copied())?;
    let chi_h = chi.restrict(&labels);

    let mut out = Vec::new();
    for &((lu, lv), c) in &pairs {
        let certified = match ell.checked_sub(1) {
            None => true,
            Some(inner) => ball_distances(&h, inner, &[lu, lv]).keys().all(|&w| {
                let orig = labels[w as usize - 1];
                sample.degs.get(&orig).copied() == Some(h.degree(w))
            }),
        };
        if certified {
            let t = nbrtype(&h, &chi_h, ell, (lu, lv))?;
            out.push(((labels[lu as usize - 1], labels[lv as usize - 1]), c, t));
        }
    }
    Ok(out)
}

/// Per-type count of certified edges, with multiplicity.
pub fn count_type_edges(sample: &InducedSample, chi: &Coloring, ell: u32) -> Result<BTreeMap<RootedType, u64>> {
    let mut counts = BTreeMap::new();
    for (_, c, t) in accepted_types(sample, chi, ell)? {
        *counts.entry(t).or_insert(0) += c as u64;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectorDiagnostics {
    pub b: u32,
    /// Ball size served; 0 for a full-storage collector serving every size.
    pub a: usize,
    #[serde(rename = "K")]
    pub k: f64,
    pub range: u64,
    pub s_size: usize,
    pub f_size: usize,
    pub failed: bool,
    pub accepted_count: u64,
}

#[derive(Debug)]
struct Collector {
    b: u32,
    a: usize,
    k: f64,
    /// `None` stores every vertex.
    hash: Option<PolyHash>,
    cap: usize,
    sample: InducedSample,
    failed: bool,
    /// Size of `S` when the collector failed or stopped.
    s_size: usize,
    f_size: usize,
}

impl Collector {
    fn keeps(&self, v: Vertex) -> bool {
        self.hash.as_ref().is_none_or(|h| h.eval(v as u64) == 0)
    }

    fn range(&self) -> u64 {
        self.hash.as_ref().map_or(1, |h| h.range())
    }

    fn words(&self) -> usize {
        if self.failed {
            return 0;
        }
        self.sample.words() + self.hash.as_ref().map_or(0, |h| h.words())
    }

    fn diagnostics(&self, accepted: u64) -> CollectorDiagnostics {
        CollectorDiagnostics {
            b: self.b,
            a: self.a,
            k: self.k,
            range: self.range(),
            s_size: if self.failed { self.s_size } else { self.sample.degs.len() },
            f_size: if self.failed { self.f_size } else { self.sample.edges.len() },
            failed: self.failed,
            accepted_count: accepted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdvReport {
    pub m: u64,
    pub b: u32,
    /// `None` when a selected collector failed.
    pub distribution: Option<TypeDistribution>,
    pub collectors: Vec<CollectorDiagnostics>,
}

impl AdvReport {
    pub fn failed(&self) -> bool {
        self.distribution.is_none()
    }
}

pub struct AdvEstimator {
    chi: Coloring,
    params: AdvParams,
    m: u64,
    b_max: u32,
    collectors: Vec<Collector>,
    /// Collectors dropped because their guess became too small.
    retired: Vec<CollectorDiagnostics>,
    meter: SpaceMeter,
}

impl AdvEstimator {
    pub fn new<R: Rng + ?Sized>(n: usize, chi: Coloring, params: AdvParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let max_edges = (n as u64 * params.d as u64 / 2).max(1);
        let b_max = 63 - max_edges.leading_zeros();
        let a_max = params.max_ball_size();
        let mut collectors = Vec::new();
        for b in 0..=b_max {
            let base = params.scale(b, 1);
            if base <= 1.0 {
                collectors.push(Collector {
                    b,
                    a: 0,
                    k: base,
                    hash: None,
                    cap: usize::MAX,
                    sample: InducedSample::default(),
                    failed: false,
                    s_size: 0,
                    f_size: 0,
                });
                continue;
            }
            for a in 2..=a_max {
                let k = params.scale(b, a);
                let range = 1u64 << (k.log2().floor() as u32).min(40);
                let hash = sample_hash(2 * a, (n as u64 + 1).max(range), range, rng)?;
                let cap = ((n as f64).powf(1.0 - 1.0 / (2.0 * a as f64)).ceil() as usize).max(MIN_SPACE_CAP);
                collectors.push(Collector {
                    b,
                    a,
                    k,
                    hash: Some(hash),
                    cap,
                    sample: InducedSample::default(),
                    failed: false,
                    s_size: 0,
                    f_size: 0,
                });
            }
        }
        let mut est = Self {
            chi,
            params,
            m: 0,
            b_max,
            collectors,
            retired: Vec::new(),
            meter: SpaceMeter::new(),
        };
        est.meter.set(est.words());
        Ok(est)
    }

    fn words(&self) -> usize {
        1 + self.chi.state_words() + self.collectors.iter().map(Collector::words).sum::<usize>()
    }
}

impl StreamAlgorithm for AdvEstimator {
    type Output = AdvReport;

    fn pass_cap(&self) -> usize {
        1
    }

    fn process(&mut self, (u, v): Edge) {
        self.m += 1;
        for c in self.collectors.iter_mut().filter(|c| !c.failed) {
            let ku = c.keeps(u);
            let kv = c.keeps(v);
            if ku {
                *c.sample.degs.entry(u).or_insert(0) += 1;
            }
            if kv {
                *c.sample.degs.entry(v).or_insert(0) += 1;
            }
            if ku && kv {
                *c.sample.edges.entry((u, v)).or_insert(0) += 1;
            }
            if c.sample.degs.len() > c.cap {
                c.failed = true;
                c.s_size = c.sample.degs.len();
                c.f_size = c.sample.edges.len();
                c.sample = InducedSample::default();
            }
        }
        if self.m.is_power_of_two() {
            // guesses b with 2^(b+1) <= m can no longer be selected
            let m = self.m;
            let (keep, gone): (Vec<_>, Vec<_>) = std::mem::take(&mut self.collectors)
                .into_iter()
                .partition(|c| (1u64 << (c.b + 1)) > m);
            self.collectors = keep;
            self.retired.extend(gone.iter().map(|c| c.diagnostics(0)));
        }
        let words = self.words();
        self.meter.set(words);
    }

    fn end_pass(&mut self, _pass: usize) -> bool {
        false
    }

    fn finalize(self) -> Result<AdvReport> {
        if self.m == 0 {
            return Err(Error::EmptyGraph);
        }
        let b = 63 - self.m.leading_zeros();
        if b > self.b_max {
            return Err(Error::InvalidParameter(format!(
                "stream has {} edges, more than a {}-bounded graph allows",
                self.m, self.params.d
            )));
        }
        let mut diagnostics = self.retired;
        let mut weights: BTreeMap<RootedType, f64> = BTreeMap::new();
        let mut failed = false;
        for c in &self.collectors {
            if c.b != b {
                diagnostics.push(c.diagnostics(0));
                continue;
            }
            if c.failed {
                failed = true;
                diagnostics.push(c.diagnostics(0));
                continue;
            }
            let counts = count_type_edges(&c.sample, &self.chi, self.params.ell)?;
            let mut accepted = 0;
            let scale = (c.range() as f64).powi(c.a as i32);
            for (t, x) in counts {
                if c.a != 0 && t.vertex_count() != c.a {
                    continue;
                }
                accepted += x;
                *weights.entry(t).or_insert(0.0) += scale * x as f64 / self.m as f64;
            }
            diagnostics.push(c.diagnostics(accepted));
        }
        diagnostics.sort_by_key(|d| (d.b, d.a));
        let distribution = if failed || weights.values().all(|&w| w == 0.0) {
            None
        } else {
            Some(fix_normalization(&weights)?)
        };
        Ok(AdvReport {
            m: self.m,
            b,
            distribution,
            collectors: diagnostics,
        })
    }

    fn meter(&self) -> &SpaceMeter {
        &self.meter
    }
}
