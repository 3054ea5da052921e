//! Classical clean-up of measured bitstrings: greedy repair of blockade
//! violations, greedy completion to a maximal independent set, ranking of
//! sample batches and the uniform random-sampler baseline.

use crate::error::{Error, Result};
use crate::graph::{is_independent_set, mwis_cost, Configuration, MwisGraph};
use crate::io::SampleBatch;
use crate::rng::stream_rng;
use crate::solver::SolutionSet;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// Passes of [`vertex_add`] unless told otherwise.
pub const DEFAULT_ADD_ITERATIONS: usize = 10;
/// Random strings per repeat in the sampler baseline.
pub const DEFAULT_BASELINE_STRINGS: usize = 728;
pub const DEFAULT_BASELINE_REPEATS: usize = 100;

fn check_len(graph: &MwisGraph, config: &Configuration) -> Result<()> {
    if config.len() != graph.len() {
        return Err(Error::input(format!(
            "configuration has {} bits but the graph has {} vertices",
            config.len(),
            graph.len()
        )));
    }
    Ok(())
}

fn reduce_with<R: Rng>(graph: &MwisGraph, config: &Configuration, rng: &mut R) -> Configuration {
    let n = graph.len();
    let mut x = config.clone();
    let mut viol: Vec<usize> = (0..n)
        .map(|i| {
            if x.get(i) {
                graph.neighbors(i).iter().filter(|&&j| x.get(j)).count()
            } else {
                0
            }
        })
        .collect();
    let mut ties = Vec::with_capacity(n);
    loop {
        let m = viol.iter().copied().max().unwrap_or(0);
        if m == 0 {
            return x;
        }
        ties.clear();
        ties.extend((0..n).filter(|&i| viol[i] == m));
        let &v = ties.choose(rng).expect("non-empty");
        x.set(v, false);
        viol[v] = 0;
        for &j in graph.neighbors(v) {
            if x.get(j) {
                viol[j] -= 1;
            }
        }
    }
}

fn add_with<R: Rng>(graph: &MwisGraph, config: &Configuration, iterations: usize, rng: &mut R) -> Configuration {
    let n = graph.len();
    let weight = |c: &Configuration| -> f64 { c.ones().map(|i| graph.weights()[i]).sum() };
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<(Configuration, f64)> = None;
    for _ in 0..iterations {
        let mut y = config.clone();
        order.shuffle(rng);
        for &i in &order {
            if !y.get(i) && !graph.neighbors(i).iter().any(|&j| y.get(j)) {
                y.set(i, true);
            }
        }
        let c = -weight(&y);
        if best.as_ref().is_none_or(|(_, bc)| c < bc - 1e-12) {
            best = Some((y, c));
        }
    }
    best.map_or_else(|| config.clone(), |(y, _)| y)
}

/// Repeatedly clears the selected vertex with the most selected neighbours
/// (ties uniformly at random) until no edge has both ends selected. Never
/// sets a bit.
pub fn vertex_reduce(graph: &MwisGraph, config: &Configuration, seed: u64) -> Result<Configuration> {
    check_len(graph, config)?;
    Ok(reduce_with(graph, config, &mut stream_rng(seed, 0)))
}

/// Greedy completion: each of `iterations` passes visits the vertices in a
/// fresh random order and sets every one that has no selected neighbour;
/// the lowest-cost result is kept. The output is a maximal independent set.
pub fn vertex_add(graph: &MwisGraph, config: &Configuration, iterations: usize, seed: u64) -> Result<Configuration> {
    check_len(graph, config)?;
    if iterations == 0 {
        return Err(Error::input("vertex addition needs at least one pass"));
    }
    if !is_independent_set(graph, config)? {
        return Err(Error::input(format!("{config} is not an independent set")));
    }
    Ok(add_with(graph, config, iterations, &mut stream_rng(seed, 0)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Pipeline {
    #[serde(rename = "raw")]
    #[value(name = "raw")]
    Raw,
    #[serde(rename = "reduce")]
    #[value(name = "reduce")]
    Reduce,
    #[default]
    #[serde(rename = "reduce+add")]
    #[value(name = "reduce+add")]
    ReduceAdd,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pipeline::Raw => "raw",
            Pipeline::Reduce => "reduce",
            Pipeline::ReduceAdd => "reduce+add",
        })
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Pipeline::Raw),
            "reduce" => Ok(Pipeline::Reduce),
            "reduce+add" => Ok(Pipeline::ReduceAdd),
            other => Err(Error::input(format!(
                "unknown pipeline {other:?} (expected raw, reduce or reduce+add)"
            ))),
        }
    }
}

fn run_pipeline<R: Rng>(graph: &MwisGraph, config: &Configuration, pipeline: Pipeline, rng: &mut R) -> Configuration {
    match pipeline {
        Pipeline::Raw => config.clone(),
        Pipeline::Reduce => reduce_with(graph, config, rng),
        Pipeline::ReduceAdd => {
            let r = reduce_with(graph, config, rng);
            add_with(graph, &r, DEFAULT_ADD_ITERATIONS, rng)
        }
    }
}

/// Applies the pipeline to every shot; shot `k` (in expanded order) draws
/// from stream `k` of `seed`, so the result does not depend on threading.
pub fn process_batch(
    graph: &MwisGraph,
    batch: &SampleBatch,
    pipeline: Pipeline,
    seed: u64,
) -> Result<Vec<Configuration>> {
    let shots = batch.expanded();
    if let Some(c) = shots.first() {
        check_len(graph, c)?;
    }
    Ok(shots
        .par_iter()
        .enumerate()
        .map(|(k, c)| run_pipeline(graph, c, pipeline, &mut stream_rng(seed, k as u64)))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedRow {
    pub configuration: Configuration,
    pub count: u64,
    pub frequency: f64,
    /// Penalised cost (blockade violations pay the graph's `U`).
    pub cost: f64,
    pub independent: bool,
    /// Membership in the ground set, when one was supplied.
    pub ground: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedTable {
    pub pipeline: Pipeline,
    pub total: u64,
    pub rows: Vec<RankedRow>,
    /// Fraction of shots whose processed configuration is a ground state.
    pub ground_state_probability: Option<f64>,
    /// Shot-averaged penalised cost after processing.
    pub mean_cost: f64,
}

/// Processes a batch, merges identical outputs and sorts them by
/// frequency (descending), then cost, then bitstring.
pub fn rank_configurations(
    graph: &MwisGraph,
    batch: &SampleBatch,
    pipeline: Pipeline,
    ground: Option<&SolutionSet>,
    seed: u64,
) -> Result<RankedTable> {
    let processed = process_batch(graph, batch, pipeline, seed)?;
    let total = processed.len() as u64;
    let mut counts: HashMap<Configuration, u64> = HashMap::new();
    for c in processed {
        *counts.entry(c).or_default() += 1;
    }
    let mut rows = Vec::with_capacity(counts.len());
    for (configuration, count) in counts {
        rows.push(RankedRow {
            cost: mwis_cost(graph, &configuration)?,
            independent: is_independent_set(graph, &configuration)?,
            ground: ground.map(|g| g.contains(&configuration)),
            frequency: count as f64 / total.max(1) as f64,
            configuration,
            count,
        });
    }
    rows.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.cost.total_cmp(&b.cost))
            .then_with(|| a.configuration.cmp(&b.configuration))
    });
    let ground_state_probability = ground.map(|_| {
        rows.iter()
            .filter(|r| r.ground == Some(true))
            .map(|r| r.count)
            .sum::<u64>() as f64
            / total.max(1) as f64
    });
    let mean_cost = rows.iter().map(|r| r.cost * r.count as f64).sum::<f64>() / total.max(1) as f64;
    Ok(RankedTable {
        pipeline,
        total,
        rows,
        ground_state_probability,
        mean_cost,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineStats {
    pub mean: f64,
    /// Population standard deviation over repeats.
    pub std: f64,
    pub per_repeat: Vec<f64>,
    pub n_strings: usize,
    pub repeats: usize,
}

impl BaselineStats {
    fn from_values(per_repeat: Vec<f64>, n_strings: usize) -> Self {
        let n = per_repeat.len().max(1) as f64;
        let mean = per_repeat.iter().sum::<f64>() / n;
        let std = (per_repeat.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n).sqrt();
        BaselineStats {
            mean,
            std,
            repeats: per_repeat.len(),
            per_repeat,
            n_strings,
        }
    }
}

/// Uniform random bitstrings pushed through reduce+add: each repeat draws
/// `n_strings` strings and records the fraction landing in `ground`.
/// Repeat `r` uses stream `r` of `seed`.
pub fn sampler_baseline(
    graph: &MwisGraph,
    ground: &SolutionSet,
    n_strings: usize,
    repeats: usize,
    seed: u64,
) -> Result<BaselineStats> {
    if n_strings == 0 || repeats == 0 {
        return Err(Error::input("the baseline needs at least one string and one repeat"));
    }
    if let Some(c) = ground.configurations.first() {
        check_len(graph, c)?;
    }
    let n = graph.len();
    let per_repeat: Vec<f64> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let mut hits = 0usize;
            for _ in 0..n_strings {
                let x = Configuration::new((0..n).map(|_| rng.random::<bool>()).collect());
                let y = run_pipeline(graph, &x, Pipeline::ReduceAdd, &mut rng);
                hits += ground.contains(&y) as usize;
            }
            hits as f64 / n_strings as f64
        })
        .collect();
    Ok(BaselineStats::from_values(per_repeat, n_strings))
}

/// Spearman rank correlation (average ranks for ties); `None` when either
/// side is constant or fewer than two points are given.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub source: String,
    pub ground_state_probability: f64,
    pub mean_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntiCorrelation {
    pub points: Vec<CorrelationPoint>,
    /// Spearman ρ between ground-state probability and mean cost.
    pub spearman: Option<f64>,
}

/// Ground-state probability against mean processed cost across batches of
/// varying quality; good batches should sit low in cost and high in
/// probability, giving a negative rank correlation.
pub fn anti_correlation(
    graph: &MwisGraph,
    batches: &[SampleBatch],
    ground: &SolutionSet,
    pipeline: Pipeline,
    seed: u64,
) -> Result<AntiCorrelation> {
    let points = batches
        .iter()
        .map(|b| {
            let t = rank_configurations(graph, b, pipeline, Some(ground), seed)?;
            Ok(CorrelationPoint {
                source: b.source.clone(),
                ground_state_probability: t.ground_state_probability.unwrap_or(0.0),
                mean_cost: t.mean_cost,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let p: Vec<f64> = points.iter().map(|c| c.ground_state_probability).collect();
    let e: Vec<f64> = points.iter().map(|c| c.mean_cost).collect();
    Ok(AntiCorrelation {
        spearman: spearman(&p, &e),
        points,
    })
}
