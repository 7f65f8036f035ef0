//! Multi-pass edge streams, space accounting and reservoir sampling.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Coloring, DirectedMultigraph, Edge};
use crate::types::{RootedType, TypeDistribution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamMode {
    Adversarial,
    Random,
}

/// A fixed ordering of an edge multiset, replayed identically on every pass,
/// optionally filtered down to the edges a coloring keeps bichromatic.
#[derive(Debug, Clone)]
pub struct PassStream {
    order: Vec<Edge>,
    mode: StreamMode,
    filter: Option<Coloring>,
}

impl PassStream {
    /// Edges in the given order; treated as adversarial.
    pub fn from_order(order: Vec<Edge>) -> Self {
        Self {
            order,
            mode: StreamMode::Adversarial,
            filter: None,
        }
    }

    /// The graph's edges in sorted order, each repeated by multiplicity.
    pub fn adversarial(g: &DirectedMultigraph) -> Self {
        Self::from_order(g.edge_sequence().collect())
    }

    /// A uniformly random ordering of the edge multiset.
    pub fn random<R: Rng + ?Sized>(g: &DirectedMultigraph, rng: &mut R) -> Self {
        let mut order: Vec<Edge> = g.edge_sequence().collect();
        order.shuffle(rng);
        Self {
            order,
            mode: StreamMode::Random,
            filter: None,
        }
    }

    /// Drops monochromatic edges as they are read. Filters compose.
    pub fn color_filter(mut self, chi: Coloring) -> Self {
        match self.filter.take() {
            None => self.filter = Some(chi),
            Some(prev) => {
                let kept = self
                    .order
                    .into_iter()
                    .filter(|&(u, v)| prev.color(u) != prev.color(v))
                    .collect();
                self.order = kept;
                self.filter = Some(chi);
            }
        }
        self
    }

    pub fn mode(&self) -> StreamMode {
        self.mode
    }

    /// Length of the underlying ordering before filtering.
    pub fn raw_len(&self) -> usize {
        self.order.len()
    }

    /// One pass over the surviving edges.
    pub fn pass(&self) -> impl Iterator<Item = Edge> + '_ {
        self.order
            .iter()
            .copied()
            .filter(move |&(u, v)| self.filter.as_ref().is_none_or(|chi| chi.color(u) != chi.color(v)))
    }

    /// Number of edges a pass yields.
    pub fn len(&self) -> usize {
        self.pass().count()
    }

    pub fn is_empty(&self) -> bool {
        self.pass().next().is_none()
    }
}

/// Word counts attributed to algorithm state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SpaceMeter {
    current: usize,
    peak: usize,
}

impl SpaceMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, words: usize) {
        self.current += words;
        self.peak = self.peak.max(self.current);
    }

    pub fn free(&mut self, words: usize) {
        self.current = self.current.saturating_sub(words);
    }

    pub fn set(&mut self, words: usize) {
        self.current = words;
        self.peak = self.peak.max(words);
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn peak(&self) -> usize {
        self.peak
    }
}

/// An algorithm driven pass by pass.
pub trait StreamAlgorithm {
    type Output;

    /// Upper bound on the passes this algorithm may request.
    fn pass_cap(&self) -> usize;

    fn begin_pass(&mut self, _pass: usize) {}

    fn process(&mut self, e: Edge);

    /// Returns whether another pass is wanted.
    fn end_pass(&mut self, pass: usize) -> bool;

    fn finalize(self) -> Result<Self::Output>;

    fn meter(&self) -> &SpaceMeter;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord<T> {
    pub passes_used: usize,
    pub peak_words: usize,
    pub output: T,
}

pub fn run_passes<A: StreamAlgorithm>(mut alg: A, stream: &PassStream) -> Result<RunRecord<A::Output>> {
    let cap = alg.pass_cap();
    let mut pass = 0;
    loop {
        if pass == cap {
            return Err(Error::PassCapExceeded(cap));
        }
        alg.begin_pass(pass);
        for e in stream.pass() {
            alg.process(e);
        }
        let more = alg.end_pass(pass);
        pass += 1;
        if !more {
            break;
        }
    }
    let peak_words = alg.meter().peak();
    Ok(RunRecord {
        passes_used: pass,
        peak_words,
        output: alg.finalize()?,
    })
}

/// `D` independent single-slot reservoirs over one substream. Each slot
/// jumps straight to its next replacement index, so an offer costs O(1)
/// unless some slot is due.
#[derive(Debug, Clone)]
pub struct ReservoirSet<T> {
    slots: Vec<Option<T>>,
    due: BinaryHeap<Reverse<(u64, usize)>>,
    seen: u64,
}

impl<T: Clone> ReservoirSet<T> {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("reservoir needs at least one slot".into()));
        }
        Ok(Self {
            slots: vec![None; d],
            due: BinaryHeap::new(),
            seen: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// After `c` items, the next index at which a slot is replaced.
    fn next_index<R: Rng + ?Sized>(c: u64, rng: &mut R) -> u64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        let jump = (c as f64 / u).floor();
        if jump >= u64::MAX as f64 {
            u64::MAX
        } else {
            jump as u64 + 1
        }
    }

    pub fn offer<R: Rng + ?Sized>(&mut self, item: T, rng: &mut R) {
        self.seen += 1;
        if self.seen == 1 {
            for i in 0..self.slots.len() {
                self.slots[i] = Some(item.clone());
                self.due.push(Reverse((Self::next_index(1, rng), i)));
            }
            return;
        }
        while let Some(&Reverse((at, i))) = self.due.peek() {
            if at != self.seen {
                break;
            }
            self.due.pop();
            self.slots[i] = Some(item.clone());
            self.due.push(Reverse((Self::next_index(self.seen, rng), i)));
        }
    }

    /// The samples, or `None` when nothing was offered.
    pub fn samples(&self) -> Option<Vec<T>> {
        if self.seen == 0 {
            None
        } else {
            Some(self.slots.iter().map(|s| s.clone().expect("filled on first offer")).collect())
        }
    }

    /// Words of state: one per slot item, one per pending index, plus the counter.
    pub fn words(&self, item_words: usize) -> usize {
        self.slots.len() * (item_words + 1) + 1
    }
}

/// One pass of reservoir sampling over the edges accepted by `keep`.
pub fn reservoir_sample<R, F>(stream: &PassStream, mut keep: F, d: usize, rng: &mut R) -> Result<ReservoirSet<Edge>>
where
    R: Rng + ?Sized,
    F: FnMut(Edge) -> bool,
{
    let mut set = ReservoirSet::new(d)?;
    for e in stream.pass() {
        if keep(e) {
            set.offer(e, rng);
        }
    }
    Ok(set)
}

/// Half the L1 distance over the union of supports.
pub fn tv_distance(a: &TypeDistribution, b: &TypeDistribution) -> f64 {
    let mut sum = 0.0;
    for (t, w) in a.iter() {
        sum += (w - b.weight(t)).abs();
    }
    for (t, w) in b.iter() {
        if a.weight(t) == 0.0 {
            sum += w;
        }
    }
    sum / 2.0
}

/// Rescales nonnegative weights to a probability vector.
pub fn fix_normalization(raw: &BTreeMap<RootedType, f64>) -> Result<TypeDistribution> {
    if raw.values().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    TypeDistribution::from_counts(raw)
}
