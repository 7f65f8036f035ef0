//! The local fractional cut `pos`, its sampled estimator and the
//! type-level map built from it.
//!
//! Every vertex looks only at edges to strictly lower colors (`lo`) and
//! higher colors (`hi`). Color-1 vertices see no `lo` edges, so `pos` is a
//! recursion of depth at most `k - 1`.

use std::collections::HashMap;
use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Num};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::graph::{Coloring, DirectedMultigraph, FractionalCut, Vertex};
use crate::types::{RootedType, TypeDistribution};

/// Numeric types `pos` can be evaluated in.
pub trait Scalar: Clone + PartialOrd + Num + FromPrimitive + Debug {}
impl<T: Clone + PartialOrd + Num + FromPrimitive + Debug> Scalar for T {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalParams {
    /// Slack in `[0, 1)`.
    pub alpha: f64,
    /// Samples per recursive estimate.
    pub d_samp: usize,
}

impl LocalParams {
    pub fn new(alpha: f64, d_samp: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} outside [0, 1)")));
        }
        if d_samp == 0 {
            return Err(Error::InvalidParameter("d_samp must be positive".into()));
        }
        Ok(Self { alpha, d_samp })
    }
}

/// Error budget `eps^(10 (k + 1 - a))` for color `a`.
pub fn delta_schedule(eps: f64, k: u32, a: u32) -> f64 {
    eps.powi(10 * (k as i32 + 1 - a as i32))
}

/// Edge counts (with multiplicity) of the four lo/hi, in/out classes at a vertex.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PartitionCounts {
    pub in_lo: u64,
    pub out_lo: u64,
    pub in_hi: u64,
    pub out_hi: u64,
}

impl PartitionCounts {
    pub fn at(g: &DirectedMultigraph, chi: &Coloring, v: Vertex) -> Result<Self> {
        let cv = chi.color(v);
        let mut c = Self::default();
        for &(u, m) in g.in_neighbors(v) {
            match chi.color(u).cmp(&cv) {
                std::cmp::Ordering::Less => c.in_lo += m as u64,
                std::cmp::Ordering::Greater => c.in_hi += m as u64,
                std::cmp::Ordering::Equal => return Err(Error::ImproperColoring(u, v)),
            }
        }
        for &(u, m) in g.out_neighbors(v) {
            match chi.color(u).cmp(&cv) {
                std::cmp::Ordering::Less => c.out_lo += m as u64,
                std::cmp::Ordering::Greater => c.out_hi += m as u64,
                std::cmp::Ordering::Equal => return Err(Error::ImproperColoring(v, u)),
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.in_lo + self.out_lo + self.in_hi + self.out_hi
    }

    pub fn y_values<S: Scalar>(&self, alpha: &S) -> YValues<S> {
        let max = |hi: u64, lo: u64| {
            let hi = S::from_u64(hi).expect("count fits");
            let lo = alpha.clone() * S::from_u64(lo).expect("count fits");
            if hi >= lo {
                hi
            } else {
                lo
            }
        };
        YValues {
            y_in: max(self.in_hi, self.in_lo),
            y_out: max(self.out_hi, self.out_lo),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YValues<S = f64> {
    pub y_in: S,
    pub y_out: S,
}

/// Clamps `x` to `[0, 1]` along the ramp from `-y_in` (value 1) to `y_out`
/// (value 0). With both thresholds zero this is the step `x <= 0`.
pub fn cutoff<S: Scalar>(x: &S, y: &YValues<S>) -> S {
    let lower = S::zero() - y.y_in.clone();
    if *x <= lower {
        S::one()
    } else if *x > y.y_out {
        S::zero()
    } else {
        (y.y_out.clone() - x.clone()) / (y.y_in.clone() + y.y_out.clone())
    }
}

/// Memoized evaluation of `pos` on one graph, coloring and `alpha`.
pub struct PosContext<'a, S = f64> {
    g: &'a DirectedMultigraph,
    chi: &'a Coloring,
    alpha: S,
    memo: HashMap<Vertex, S>,
}

impl<'a, S: Scalar> PosContext<'a, S> {
    pub fn new(g: &'a DirectedMultigraph, chi: &'a Coloring, alpha: S) -> Result<Self> {
        if alpha < S::zero() || alpha >= S::one() {
            return Err(Error::InvalidParameter("alpha outside [0, 1)".into()));
        }
        chi.check_proper(g)?;
        Ok(Self {
            g,
            chi,
            alpha,
            memo: HashMap::new(),
        })
    }

    /// `pos(v)`; isolated vertices get 0.
    pub fn pos(&mut self, v: Vertex) -> S {
        if let Some(x) = self.memo.get(&v) {
            return x.clone();
        }
        let g = self.g;
        let chi = self.chi;
        let cv = chi.color(v);
        let value = if g.is_isolated(v) {
            S::zero()
        } else {
            let counts = PartitionCounts::at(g, chi, v).expect("coloring checked proper");
            let mut z_in = S::zero();
            for &(u, m) in g.in_neighbors(v) {
                if chi.color(u) < cv {
                    z_in = z_in + self.pos(u) * S::from_u32(m).expect("multiplicity fits");
                }
            }
            let mut z_out = S::zero();
            for &(u, m) in g.out_neighbors(v) {
                if chi.color(u) < cv {
                    z_out = z_out + (S::one() - self.pos(u)) * S::from_u32(m).expect("multiplicity fits");
                }
            }
            cutoff(&(z_in - z_out), &counts.y_values(&self.alpha))
        };
        self.memo.insert(v, value.clone());
        value
    }

    /// `pos` on every vertex.
    pub fn all(&mut self) -> FractionalCut<S> {
        let n = self.g.n();
        let mut order: Vec<Vertex> = (1..=n as Vertex).collect();
        order.sort_by_key(|&v| self.chi.color(v));
        let mut x = FractionalCut::constant(n, S::zero());
        for v in order {
            let p = self.pos(v);
            x.set(v, p);
        }
        x
    }
}

pub fn pos<S: Scalar>(g: &DirectedMultigraph, chi: &Coloring, alpha: S, v: Vertex) -> Result<S> {
    g.check_vertex(v)?;
    Ok(PosContext::new(g, chi, alpha)?.pos(v))
}

pub fn pos_all<S: Scalar>(g: &DirectedMultigraph, chi: &Coloring, alpha: S) -> Result<FractionalCut<S>> {
    Ok(PosContext::new(g, chi, alpha)?.all())
}

/// Sampled estimator of `pos`: each recursive call draws `d_samp` fresh
/// neighbors with replacement.
///
/// Vertices without `lo` edges are deterministic, so draws landing on them
/// are aggregated by a multinomial split, which leaves the output
/// distribution unchanged.
pub struct PosEstimator<'a> {
    g: &'a DirectedMultigraph,
    chi: &'a Coloring,
    params: LocalParams,
    colors: Vec<u32>,
    info: HashMap<Vertex, VertexInfo>,
}

struct VertexInfo {
    y: YValues<f64>,
    in_lo: Vec<(Vertex, u32)>,
    out_lo: Vec<(Vertex, u32)>,
    in_lo_total: u64,
    out_lo_total: u64,
    /// Value when no `lo` edges exist.
    fixed: Option<f64>,
}

impl<'a> PosEstimator<'a> {
    pub fn new(g: &'a DirectedMultigraph, chi: &'a Coloring, params: LocalParams) -> Result<Self> {
        chi.check_proper(g)?;
        let colors = (0..=g.n() as Vertex).map(|v| if v == 0 { 0 } else { chi.color(v) }).collect();
        Ok(Self {
            g,
            chi,
            params,
            colors,
            info: HashMap::new(),
        })
    }

    fn info(&mut self, v: Vertex) -> &VertexInfo {
        let g = self.g;
        let colors = &self.colors;
        let chi = self.chi;
        let alpha = self.params.alpha;
        self.info.entry(v).or_insert_with(|| {
            let cv = colors[v as usize];
            let counts = PartitionCounts::at(g, chi, v).expect("coloring checked proper");
            let y = counts.y_values(&alpha);
            let lo = |list: &[(Vertex, u32)]| -> Vec<(Vertex, u32)> {
                list.iter().copied().filter(|&(u, _)| colors[u as usize] < cv).collect()
            };
            let fixed = if counts.total() == 0 {
                Some(0.0)
            } else if counts.in_lo == 0 && counts.out_lo == 0 {
                Some(cutoff(&0.0, &y))
            } else {
                None
            };
            VertexInfo {
                y,
                in_lo: lo(g.in_neighbors(v)),
                out_lo: lo(g.out_neighbors(v)),
                in_lo_total: counts.in_lo,
                out_lo_total: counts.out_lo,
                fixed,
            }
        })
    }

    /// One independent draw of the estimate at `v`.
    pub fn draw<R: Rng + ?Sized>(&mut self, v: Vertex, rng: &mut R) -> Result<f64> {
        self.g.check_vertex(v)?;
        Ok(self.draw_inner(v, rng))
    }

    fn draw_inner<R: Rng + ?Sized>(&mut self, v: Vertex, rng: &mut R) -> f64 {
        let info = self.info(v);
        if let Some(x) = info.fixed {
            return x;
        }
        let y = info.y.clone();
        let in_lo = info.in_lo.clone();
        let out_lo = info.out_lo.clone();
        let (in_total, out_total) = (info.in_lo_total, info.out_lo_total);
        let d = self.params.d_samp;
        let z_in = if in_total == 0 {
            0.0
        } else {
            in_total as f64 / d as f64 * self.sample_sum(&in_lo, in_total, rng, |p| p)
        };
        let z_out = if out_total == 0 {
            0.0
        } else {
            out_total as f64 / d as f64 * self.sample_sum(&out_lo, out_total, rng, |p| 1.0 - p)
        };
        cutoff(&(z_in - z_out), &y)
    }

    /// Sum of `f(estimate(u_j))` over `d_samp` neighbors drawn with
    /// replacement proportionally to multiplicity.
    fn sample_sum<R: Rng + ?Sized>(
        &mut self,
        list: &[(Vertex, u32)],
        total: u64,
        rng: &mut R,
        f: impl Fn(f64) -> f64,
    ) -> f64 {
        let mut left = self.params.d_samp as u64;
        let mut mass_left = total;
        let mut sum = 0.0;
        for &(u, m) in list {
            if left == 0 {
                break;
            }
            let hits = if m as u64 == mass_left {
                left
            } else {
                Binomial::new(left, m as f64 / mass_left as f64)
                    .expect("probability in range")
                    .sample(rng)
            };
            left -= hits;
            mass_left -= m as u64;
            if hits == 0 {
                continue;
            }
            match self.info(u).fixed {
                Some(x) => sum += hits as f64 * f(x),
                None => {
                    for _ in 0..hits {
                        sum += f(self.draw_inner(u, rng));
                    }
                }
            }
        }
        sum
    }
}

pub fn pos_est<R: Rng + ?Sized>(
    g: &DirectedMultigraph,
    chi: &Coloring,
    params: LocalParams,
    v: Vertex,
    rng: &mut R,
) -> Result<f64> {
    PosEstimator::new(g, chi, params)?.draw(v, rng)
}

/// `pos(u) (1 - pos(v))` at `alpha = 0` inside the representative of `t`
/// rooted at `(u, v)`.
pub fn local_map<S: Scalar>(t: &RootedType) -> S {
    let rep = t.representative();
    let mut ctx = PosContext::new(&rep.graph, &rep.coloring, S::zero()).expect("representatives are proper");
    let (u, v) = rep.root;
    ctx.pos(u) * (S::one() - ctx.pos(v))
}

/// `E[Local(T)]` under a type distribution.
pub fn local_expectation(dist: &TypeDistribution) -> f64 {
    dist.expectation(local_map::<f64>)
}

/// Exact `E[Local(T)]` from per-type edge counts.
pub fn local_expectation_exact(counts: &std::collections::BTreeMap<RootedType, u64>) -> Result<BigRational> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::ZeroMass);
    }
    let mut sum = BigRational::from_integer(0.into());
    for (t, &c) in counts {
        sum += local_map::<BigRational>(t) * BigRational::from_integer(c.into());
    }
    Ok(sum / BigRational::from_integer(total.into()))
}
