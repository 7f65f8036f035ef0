//! One experiment: build the graph, run the chosen pipeline, compare with
//! the exact oracle when it is small enough.

use std::time::Instant;

use dicut_core::adversarial::{AdvEstimator, AdvParams};
use dicut_core::generate::{random_proper_coloring, GraphSpec};
use dicut_core::local::{local_expectation, local_expectation_exact};
use dicut_core::multipass::{multipass_estimate, MultipassParams};
use dicut_core::random_order::{revealable_type, RandOrderEstimator};
use dicut_core::{
    dicut_value, edge_type_distribution, maxval_bruteforce, pos_all, run_passes, sample_coloring, tv_distance,
    Coloring, DirectedMultigraph, PassStream, TypeDistribution,
};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{is_estimator_failure, CliError};
use crate::report::{GraphSummary, Oracle, Report, Status};
use crate::seeds::{rng, Stream};

/// Largest radius for which the true type distribution is computed.
const TYPE_ORACLE_MAX_ELL: u32 = 2;

/// What a pipeline hands back before the shared oracle comparison.
struct Outcome {
    value: Option<f64>,
    lower_bound: Option<f64>,
    tv_to_oracle: Option<f64>,
    passes_used: usize,
    peak_words: usize,
    output: serde_json::Value,
}

impl Outcome {
    fn offline(value: f64, output: serde_json::Value) -> Self {
        Outcome {
            value: Some(value),
            lower_bound: None,
            tv_to_oracle: None,
            passes_used: 0,
            peak_words: 0,
            output,
        }
    }
}

pub fn load_graph(cfg: &ExperimentConfig) -> Result<DirectedMultigraph, CliError> {
    Ok(GraphSpec::parse(&cfg.graph)?.generate(&mut rng(cfg.seed, Stream::Graph))?)
}

/// Runs `cfg`. Estimator failures come back as a report with status
/// `estimator-failure`; everything else that goes wrong is an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let g = load_graph(cfg)?;
    if g.edge_count() == 0 {
        return Err(dicut_core::Error::EmptyGraph.into());
    }
    let start = Instant::now();
    let result = match cfg.algorithm {
        Algorithm::ExactOracle => exact_oracle(cfg, &g),
        Algorithm::LocalPos => local_pos(cfg, &g),
        Algorithm::LocalMapExpectation => local_map_expectation(cfg, &g),
        Algorithm::AdvStream => adv_stream(cfg, &g),
        Algorithm::RandStream => rand_stream(cfg, &g),
        Algorithm::Multipass => multipass(cfg, &g),
    };
    let graph = GraphSummary {
        n: g.n(),
        m: g.edge_count(),
        max_degree: g.max_degree(),
    };
    let (status, error, outcome) = match result {
        Ok(o) => (Status::Ok, None, o),
        Err(CliError::Core(e)) if is_estimator_failure(&e) => (
            Status::EstimatorFailure,
            Some(e.to_string()),
            Outcome {
                value: None,
                lower_bound: None,
                tv_to_oracle: None,
                passes_used: 0,
                peak_words: 0,
                output: serde_json::Value::Null,
            },
        ),
        Err(e) => return Err(e),
    };
    let oracle = oracle(cfg, &g)?;
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    let ratio = match (&oracle, outcome.value) {
        (Some(o), Some(v)) => Some(v / o.maxval_f64),
        _ => None,
    };
    Ok(Report {
        config: cfg.clone(),
        graph,
        status,
        error,
        value: outcome.value,
        lower_bound: outcome.lower_bound,
        oracle,
        ratio,
        tv_to_oracle: outcome.tv_to_oracle,
        passes_used: outcome.passes_used,
        peak_words: outcome.peak_words,
        output: outcome.output,
        wall_time_ms,
    })
}

fn oracle(cfg: &ExperimentConfig, g: &DirectedMultigraph) -> Result<Option<Oracle>, CliError> {
    let active = g.vertices().filter(|&v| !g.is_isolated(v)).count();
    if active > cfg.oracle_cap {
        return Ok(None);
    }
    let maxval = maxval_bruteforce(g, cfg.oracle_cap)?;
    Ok(Some(Oracle {
        maxval_f64: maxval.to_f64().unwrap_or(f64::NAN),
        maxval: maxval.to_string(),
    }))
}

fn exact_oracle(cfg: &ExperimentConfig, g: &DirectedMultigraph) -> Result<Outcome, CliError> {
    let maxval = maxval_bruteforce(g, cfg.oracle_cap)?;
    let value = maxval.to_f64().unwrap_or(f64::NAN);
    Ok(Outcome::offline(value, json!({ "maxval": maxval.to_string() })))
}

/// Greedy proper coloring in vertex order; used when the randomized search
/// gives up.
fn greedy_coloring(g: &DirectedMultigraph, k: u32) -> Option<Coloring> {
    let mut colors = vec![0u32; g.n()];
    for v in g.vertices() {
        let used: Vec<u32> = g.neighbors(v).map(|u| colors[u as usize - 1]).collect();
        colors[v as usize - 1] = (1..=k).find(|c| !used.contains(c))?;
    }
    Coloring::from_colors(k, colors).ok()
}

/// A proper coloring for the offline local algorithm, `D + 1` colors unless
/// `--colors` is given.
fn proper_coloring(cfg: &ExperimentConfig, g: &DirectedMultigraph) -> Result<Coloring, CliError> {
    let k = cfg.colors.unwrap_or(g.max_degree() as u32 + 1).max(2);
    random_proper_coloring(g, k, &mut rng(cfg.seed, Stream::Coloring))
        .or_else(|| greedy_coloring(g, k))
        .ok_or_else(|| CliError::Usage(format!("no proper {k}-coloring found")))
}

fn local_pos(cfg: &ExperimentConfig, g: &DirectedMultigraph) -> Result<Outcome, CliError> {
    let chi = proper_coloring(cfg, g)?;
    let alpha = cfg.alpha.unwrap_or(0.0);
    let value = dicut_value(g, &pos_all(g, &chi, alpha)?)?;
    let mut output = json!({ "alpha": alpha, "colors": chi.k() });
    // exact arithmetic stays cheap while the oracle is feasible
    if g.n() <= cfg.oracle_cap {
        let a = BigRational::from_float(alpha).ok_or_else(|| CliError::Usage("alpha must be finite".into()))?;
        let exact = dicut_value(g, &pos_all(g, &chi, a)?)?;
        output["exact_value"] = json!(exact.to_string());
    }
    Ok(Outcome::offline(value, output))
}

fn local_map_expectation(cfg: &ExperimentConfig, g: &DirectedMultigraph) -> Result<Outcome, CliError> {
    let chi = proper_coloring(cfg, g)?;
    let ell = cfg.ell.unwrap_or(chi.k());
    let counts = dicut_core::edge_type_counts(g, &chi, ell)?;
    let e = local_expectation_exact(&counts)?;
    let value = e.to_f64().unwrap_or(f64::NAN);
    Ok(Outcome::offline(
        value,
        json!({ "colors": chi.k(), "ell": ell, "types": counts.len(), "expectation": e.to_string() }),
    ))
}

/// `ceil(100 / eps)` colors for the single-pass pipelines.
fn single_pass_colors(cfg: &ExperimentConfig) -> u32 {
    cfg.colors.unwrap_or((100.0 / cfg.eps).ceil() as u32)
}

/// Colors the graph with a hash coloring and builds the filtered stream.
fn colored_stream(
    cfg: &ExperimentConfig,
    g: &DirectedMultigraph,
    random_order: bool,
) -> Result<(Coloring, PassStream), CliError> {
    let chi = sample_coloring(g.n(), single_pass_colors(cfg), &mut rng(cfg.seed, Stream::Coloring))?;
    let stream = if random_order {
        PassStream::random(g, &mut rng(cfg.seed, Stream::Ordering))
    } else {
        PassStream::adversarial(g)
    };
    Ok((chi.clone(), stream.color_filter(chi)))
}

fn truth(g: &DirectedMultigraph, chi: &Coloring, ell: u32) -> Result<Option<TypeDistribution>, CliError> {
    if ell > TYPE_ORACLE_MAX_ELL {
        return Ok(None);
    }
    let filtered = dicut_core::multipass::filtered_graph(g, chi)?;
    if filtered.edge_count() == 0 {
        return Ok(None);
    }
    Ok(Some(edge_type_distribution(&filtered, chi, ell)?))
}

/// Raw estimate, lower bound and the details shared by both single-pass
/// pipelines. Monochromatic edges count as uncut.
fn single_pass_value(cfg: &ExperimentConfig, kept: u64, m: u64, dist: &TypeDistribution) -> (f64, f64, f64) {
    let kept_fraction = kept as f64 / m as f64;
    let local = local_expectation(dist);
    let value = kept_fraction * local;
    (value, value - cfg.eps, local)
}

fn adv_stream(cfg: &ExperimentConfig, g: &DirectedMultigraph) -> Result<Outcome, CliError> {
    let (chi, stream) = colored_stream(cfg, g, false)?;
    let ell = cfg.ell.unwrap_or(1);
    let params = AdvParams {
        d: cfg.degree.unwrap_or(g.max_degree() as u32),
        ell,
        eps: cfg.eps,
        delta: cfg.delta,
    };
    let kept = stream.len() as u64;
    let mut est_rng = rng(cfg.seed, Stream::Estimator);
    let rec = run_passes(AdvEstimator::new(g.n(), chi.clone(), params, &mut est_rng)?, &stream)?;
    let mut outcome = Outcome {
        value: None,
        lower_bound: None,
        tv_to_oracle: None,
        passes_used: rec.passes_used,
        peak_words: rec.peak_words,
        output: serde_json::Value::Null,
    };
    if kept == 0 {
        outcome.value = Some(0.0);
        outcome.lower_bound = Some(-cfg.eps);
        outcome.output = json!({ "colors": chi.k(), "kept_edges": 0 });
        return Ok(outcome);
    }
    let Some(dist) = rec.output.distribution.as_ref() else {
        return Err(CliError::Core(dicut_core::Error::ZeroMass));
    };
    let (value, lower, local) = single_pass_value(cfg, kept, g.edge_count(), dist);
    outcome.value = Some(value);
    outcome.lower_bound = Some(lower);
    outcome.tv_to_oracle = truth(g, &chi, ell)?.map(|t| tv_distance(dist, &t));
    outcome.output = json!({
        "colors": chi.k(),
        "kept_edges": kept,
        "local_expectation": local,
        "edge_count_exponent": rec.output.b,
        "collectors": rec.output.collectors,
        "distribution": dist,
    });
    Ok(outcome)
}

fn rand_stream(cfg: &ExperimentConfig, g: &DirectedMultigraph) -> Result<Outcome, CliError> {
    let (chi, stream) = colored_stream(cfg, g, true)?;
    let ell = cfg.ell.unwrap_or(1);
    let kept = stream.len() as u64;
    if kept == 0 {
        return Ok(Outcome {
            value: Some(0.0),
            lower_bound: Some(-cfg.eps),
            tv_to_oracle: None,
            passes_used: 1,
            peak_words: chi.state_words(),
            output: json!({ "colors": chi.k(), "kept_edges": 0 }),
        });
    }
    let rec = run_passes(RandOrderEstimator::new(chi.clone(), ell, cfg.t_samples)?, &stream)?;
    let dist = &rec.output.output_distribution;
    let (value, lower, local) = single_pass_value(cfg, kept, g.edge_count(), dist);
    // the estimate lives on revealable types, so the truth is projected too
    let tv = match truth(g, &chi, ell)? {
        Some(t) => {
            let mut projected = std::collections::BTreeMap::new();
            for (ty, w) in t.iter() {
                *projected.entry(revealable_type(ty, ell)?).or_insert(0.0) += w;
            }
            Some(tv_distance(dist, &TypeDistribution::from_weights(projected)))
        }
        None => None,
    };
    Ok(Outcome {
        value: Some(value),
        lower_bound: Some(lower),
        tv_to_oracle: tv,
        passes_used: rec.passes_used,
        peak_words: rec.peak_words,
        output: json!({
            "colors": chi.k(),
            "kept_edges": kept,
            "local_expectation": local,
            "estimator": rec.output,
        }),
    })
}

fn multipass(cfg: &ExperimentConfig, g: &DirectedMultigraph) -> Result<Outcome, CliError> {
    let mut params = match cfg.colors {
        Some(k) => MultipassParams::desk(cfg.eps, k, cfg.d_samp, cfg.d_inner)?,
        None => MultipassParams::from_eps(cfg.eps, cfg.d_samp, cfg.d_inner)?,
    };
    if let Some(a) = cfg.alpha {
        params.alpha = a;
    }
    params.task_cap = cfg.task_cap;
    params.validate()?;
    let mut r: ChaCha8Rng = rng(cfg.seed, Stream::Estimator);
    let rec = multipass_estimate(&PassStream::adversarial(g), g.n(), params, &mut r)?;
    Ok(Outcome {
        value: Some(rec.output.cut_est),
        lower_bound: None,
        tv_to_oracle: None,
        passes_used: rec.passes_used,
        peak_words: rec.peak_words,
        output: json!({ "alpha": params.alpha, "estimator": rec.output }),
    })
}
