//! Multi-pass Max-DICUT estimator for graphs of unbounded degree.
//!
//! A random `k`-coloring splits every vertex's edges into `lo` and `hi`
//! parts. Pass 0 samples root edges. Each later pass serves one layer of a
//! task tree: a task at `v` learns `v`'s four partition counts and draws
//! `lo` neighbors into independent reservoirs, which become the next layer.
//! After the last pass the sampled recursion is evaluated bottom-up.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Coloring, DirectedMultigraph, Edge, Vertex};
use crate::hashing::sample_coloring;
use crate::local::{cutoff, PartitionCounts};
use crate::stream::{run_passes, PassStream, ReservoirSet, RunRecord, SpaceMeter, StreamAlgorithm};

pub const DEFAULT_TASK_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultipassParams {
    pub eps: f64,
    /// Number of colors.
    pub k: u32,
    /// Root edge samples.
    pub d_samp: usize,
    /// Neighbor samples per task and direction.
    pub d_inner: usize,
    pub alpha: f64,
    pub task_cap: usize,
}

impl MultipassParams {
    /// `k = 200/eps - 1` colors and `alpha = eps^5`.
    pub fn from_eps(eps: f64, d_samp: usize, d_inner: usize) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps {eps} outside (0, 1)")));
        }
        let k = ((200.0 / eps).round() as u32).saturating_sub(1).max(2);
        Ok(Self {
            eps,
            k,
            d_samp,
            d_inner,
            alpha: eps.powi(5),
            task_cap: DEFAULT_TASK_CAP,
        })
    }

    /// Desk-scale parameters with an explicit color count.
    pub fn desk(eps: f64, k: u32, d_samp: usize, d_inner: usize) -> Result<Self> {
        let mut p = Self::from_eps(eps, d_samp, d_inner)?;
        p.k = k;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter("need at least two colors".into()));
        }
        if self.d_samp == 0 || self.d_inner == 0 {
            return Err(Error::InvalidParameter("sample counts must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter("alpha outside [0, 1)".into()));
        }
        Ok(())
    }

    /// The output scale `1 - 100 eps^5`.
    pub fn shrink(&self) -> f64 {
        1.0 - 100.0 * self.eps.powi(5)
    }
}

/// Where a sampled neighbor's estimate comes from.
#[derive(Debug, Clone, Copy)]
enum Child {
    Task(usize),
    /// A color-1 vertex: its value is fixed by its counts.
    Fixed(Vertex),
}

#[derive(Debug)]
struct Task {
    v: Vertex,
    in_lo: Option<ReservoirSet<Vertex>>,
    out_lo: Option<ReservoirSet<Vertex>>,
    children_in: Vec<Child>,
    children_out: Vec<Child>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultipassReport {
    pub k: u32,
    pub d_samp: usize,
    pub d_inner: usize,
    /// Edges in the stream before the coloring filter.
    pub total_edges: u64,
    pub filtered_edges: u64,
    pub root_samples: usize,
    /// Tasks (including fixed color-1 vertices) served by each layer pass.
    pub frontier_sizes: Vec<usize>,
    pub total_tasks: usize,
    pub cut_est: f64,
}

pub struct MultipassEstimator {
    chi: Coloring,
    params: MultipassParams,
    rng: ChaCha8Rng,
    m: u64,
    m_total: u64,
    roots: ReservoirSet<Edge>,
    root_tasks: Vec<(usize, usize)>,
    tasks: Vec<Task>,
    /// Task ids served by the current pass.
    frontier: Vec<usize>,
    /// Task ids per vertex of the frontier.
    frontier_at: HashMap<Vertex, Vec<usize>>,
    /// Color-1 vertices needing counts this pass.
    fixed_frontier: HashSet<Vertex>,
    /// Partition counts; complete for every vertex not in `counting`.
    counts: HashMap<Vertex, PartitionCounts>,
    /// Vertices whose counts this pass gathers.
    counting: HashSet<Vertex>,
    frontier_sizes: Vec<usize>,
    done: bool,
    failure: Option<Error>,
    meter: SpaceMeter,
}

impl MultipassEstimator {
    pub fn new<R: Rng + ?Sized>(chi: Coloring, params: MultipassParams, rng: &mut R) -> Result<Self> {
        params.validate()?;
        let mut est = Self {
            chi,
            params,
            rng: ChaCha8Rng::seed_from_u64(rng.random()),
            m: 0,
            m_total: 0,
            roots: ReservoirSet::new(params.d_samp)?,
            root_tasks: Vec::new(),
            tasks: Vec::new(),
            frontier: Vec::new(),
            frontier_at: HashMap::new(),
            fixed_frontier: HashSet::new(),
            counts: HashMap::new(),
            counting: HashSet::new(),
            frontier_sizes: Vec::new(),
            done: false,
            failure: None,
            meter: SpaceMeter::new(),
        };
        est.update_meter();
        Ok(est)
    }

    fn task_words(&self) -> usize {
        // vertex, two reservoir headers and the child lists
        let per_res = 2 * self.params.d_inner + 1;
        let mut words = 0;
        for t in &self.tasks {
            words += 3 + t.children_in.len() + t.children_out.len();
            words += t.in_lo.as_ref().map_or(0, |_| per_res) + t.out_lo.as_ref().map_or(0, |_| per_res);
        }
        words
    }

    fn update_meter(&mut self) {
        let words = 1
            + self.chi.state_words()
            + self.roots.words(2)
            + 2 * self.root_tasks.len()
            + self.task_words()
            + 5 * self.counts.len()
            + self.fixed_frontier.len()
            + self.frontier.len();
        self.meter.set(words);
    }

    fn spawn(&mut self, v: Vertex) -> Result<Child> {
        if self.chi.color(v) == 1 {
            self.fixed_frontier.insert(v);
            return Ok(Child::Fixed(v));
        }
        self.spawn_task(v).map(Child::Task)
    }

    /// A task at `v`; color-1 tasks only collect counts.
    fn spawn_task(&mut self, v: Vertex) -> Result<usize> {
        if self.tasks.len() >= self.params.task_cap {
            return Err(Error::CapExceeded {
                what: "sampling tasks",
                value: self.tasks.len() + 1,
                cap: self.params.task_cap,
            });
        }
        let sampled = self.chi.color(v) > 1;
        let d = self.params.d_inner;
        self.tasks.push(Task {
            v,
            in_lo: if sampled { Some(ReservoirSet::new(d)?) } else { None },
            out_lo: if sampled { Some(ReservoirSet::new(d)?) } else { None },
            children_in: Vec::new(),
            children_out: Vec::new(),
        });
        let id = self.tasks.len() - 1;
        self.frontier.push(id);
        Ok(id)
    }

    fn open_layer(&mut self) {
        self.frontier_at.clear();
        for &id in &self.frontier {
            self.frontier_at.entry(self.tasks[id].v).or_default().push(id);
        }
        self.counting = self
            .frontier_at
            .keys()
            .chain(self.fixed_frontier.iter())
            .copied()
            .filter(|v| !self.counts.contains_key(v))
            .collect();
        for &v in &self.counting {
            self.counts.insert(v, PartitionCounts::default());
        }
        self.frontier_sizes.push(self.frontier.len() + self.fixed_frontier.len());
    }

    fn close_layer(&mut self) -> Result<()> {
        let layer = std::mem::take(&mut self.frontier);
        self.fixed_frontier.clear();
        for id in layer {
            let ins = self.tasks[id].in_lo.as_ref().and_then(|r| r.samples()).unwrap_or_default();
            let outs = self.tasks[id].out_lo.as_ref().and_then(|r| r.samples()).unwrap_or_default();
            let mut cin = Vec::with_capacity(ins.len());
            for u in ins {
                cin.push(self.spawn(u)?);
            }
            let mut cout = Vec::with_capacity(outs.len());
            for u in outs {
                cout.push(self.spawn(u)?);
            }
            let t = &mut self.tasks[id];
            t.children_in = cin;
            t.children_out = cout;
            // the samples now live in the child lists
            t.in_lo = None;
            t.out_lo = None;
        }
        Ok(())
    }

    fn count_at(&mut self, x: Vertex, (a, b): Edge) {
        let cx = self.chi.color(x);
        let other = if a == x { b } else { a };
        let lower = self.chi.color(other) < cx;
        let c = self.counts.get_mut(&x).expect("allocated when the layer opened");
        match (a == x, lower) {
            (false, true) => c.in_lo += 1,
            (false, false) => c.in_hi += 1,
            (true, true) => c.out_lo += 1,
            (true, false) => c.out_hi += 1,
        }
    }

    fn fixed_value(&self, v: Vertex) -> f64 {
        let c = self.counts.get(&v).copied().unwrap_or_default();
        if c.total() == 0 {
            return 0.0;
        }
        cutoff(&0.0, &c.y_values(&self.params.alpha))
    }

    fn evaluate(&self) -> Vec<f64> {
        let mut value = vec![0.0; self.tasks.len()];
        let d = self.params.d_inner as f64;
        for id in (0..self.tasks.len()).rev() {
            let t = &self.tasks[id];
            let c = self.counts.get(&t.v).copied().unwrap_or_default();
            if c.total() == 0 {
                value[id] = 0.0;
                continue;
            }
            let read = |ch: &Child| match *ch {
                Child::Task(j) => value[j],
                Child::Fixed(u) => self.fixed_value(u),
            };
            let z_in = if t.children_in.is_empty() {
                0.0
            } else {
                c.in_lo as f64 / d * t.children_in.iter().map(read).sum::<f64>()
            };
            let z_out = if t.children_out.is_empty() {
                0.0
            } else {
                c.out_lo as f64 / d * t.children_out.iter().map(|ch| 1.0 - read(ch)).sum::<f64>()
            };
            value[id] = cutoff(&(z_in - z_out), &c.y_values(&self.params.alpha));
        }
        value
    }
}

impl StreamAlgorithm for MultipassEstimator {
    type Output = MultipassReport;

    fn pass_cap(&self) -> usize {
        self.params.k as usize + 1
    }

    fn begin_pass(&mut self, pass: usize) {
        if pass > 0 && !self.done {
            self.open_layer();
        }
        self.update_meter();
    }

    fn process(&mut self, e: Edge) {
        let (a, b) = e;
        let (ca, cb) = (self.chi.color(a), self.chi.color(b));
        if self.frontier_sizes.is_empty() {
            self.m_total += 1;
        }
        if ca == cb || self.done {
            return;
        }
        if self.frontier_sizes.is_empty() {
            self.m += 1;
            self.roots.offer(e, &mut self.rng);
            return;
        }
        for x in [a, b] {
            if self.counting.contains(&x) {
                self.count_at(x, e);
            }
            let Some(ids) = self.frontier_at.get(&x) else {
                continue;
            };
            let other = if x == a { b } else { a };
            if self.chi.color(other) >= self.chi.color(x) {
                continue;
            }
            for &id in ids {
                let res = if x == b { &mut self.tasks[id].in_lo } else { &mut self.tasks[id].out_lo };
                if let Some(r) = res.as_mut() {
                    r.offer(other, &mut self.rng);
                }
            }
        }
    }

    fn end_pass(&mut self, pass: usize) -> bool {
        self.counting.clear();
        let result = if pass == 0 {
            match self.roots.samples() {
                None => {
                    self.done = true;
                    Ok(())
                }
                Some(edges) => edges.into_iter().try_for_each(|(u, v)| {
                    let iu = self.spawn_task(u)?;
                    let iv = self.spawn_task(v)?;
                    self.root_tasks.push((iu, iv));
                    Ok(())
                }),
            }
        } else {
            self.close_layer()
        };
        self.update_meter();
        if let Err(e) = result {
            self.done = true;
            self.failure = Some(e);
        }
        !self.done && pass + 1 < self.pass_cap()
    }

    fn finalize(self) -> Result<MultipassReport> {
        if let Some(e) = self.failure {
            return Err(e);
        }
        let cut_est = if self.root_tasks.is_empty() {
            0.0
        } else {
            let value = self.evaluate();
            let sum: f64 = self.root_tasks.iter().map(|&(u, v)| value[u] * (1.0 - value[v])).sum();
            // Monochromatic edges count as uncut.
            let kept = self.m as f64 / self.m_total as f64;
            self.params.shrink() * kept * sum / self.params.d_samp as f64
        };
        Ok(MultipassReport {
            k: self.params.k,
            d_samp: self.params.d_samp,
            d_inner: self.params.d_inner,
            total_edges: self.m_total,
            filtered_edges: self.m,
            root_samples: self.root_tasks.len(),
            frontier_sizes: self.frontier_sizes,
            total_tasks: self.tasks.len(),
            cut_est,
        })
    }

    fn meter(&self) -> &SpaceMeter {
        &self.meter
    }
}

/// Samples a pairwise independent `k`-coloring of `1..=n` and runs the
/// estimator over `stream`.
pub fn multipass_estimate<R: Rng + ?Sized>(
    stream: &PassStream,
    n: usize,
    params: MultipassParams,
    rng: &mut R,
) -> Result<RunRecord<MultipassReport>> {
    let chi = sample_coloring(n, params.k, rng)?;
    run_passes(MultipassEstimator::new(chi, params, rng)?, stream)
}

/// Same estimator with a caller-supplied coloring.
pub fn multipass_with_coloring<R: Rng + ?Sized>(
    stream: &PassStream,
    chi: Coloring,
    params: MultipassParams,
    rng: &mut R,
) -> Result<RunRecord<MultipassReport>> {
    run_passes(MultipassEstimator::new(chi, params, rng)?, stream)
}

/// Subgraph of `g` whose edges are bichromatic under `chi`.
pub fn filtered_graph(g: &DirectedMultigraph, chi: &Coloring) -> Result<DirectedMultigraph> {
    DirectedMultigraph::from_multiplicities(
        g.n(),
        g.edges().iter().copied().filter(|&((u, v), _)| chi.color(u) != chi.color(v)),
    )
}
