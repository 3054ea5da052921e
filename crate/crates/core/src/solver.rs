//! Exact classical oracles.
//!
//! MWIS instances are solved by branch-and-bound over independent sets
//! (bound: sum of the still-available weights); QUBOs and soft-tail
//! embedded instances by exhaustive Gray-code enumeration.

use crate::embed::EmbeddedInstance;
use crate::error::{Error, Result};
use crate::graph::{mwis_cost, Configuration, InteractionModel, MwisGraph, QuboProblem, RydbergParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Energies closer than this are one level.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Default vertex cap for MWIS and QUBO searches.
pub const DEFAULT_CAP: usize = 30;
/// Atom caps for [`solve_embedded`].
pub const IDEAL_EMBEDDED_CAP: usize = 34;
pub const VDW_EMBEDDED_CAP: usize = 24;

/// Branching depth that is fanned out across threads.
const SPLIT_DEPTH: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub optimal_energy: f64,
    /// Deduplicated, lexicographically sorted.
    pub configurations: Vec<Configuration>,
    /// `2^N` for the underlying index set.
    pub search_space_size: u64,
    /// True when the search pruned subtrees (branch-and-bound) rather than
    /// visiting every bitstring.
    pub pruned: bool,
}

impl SolutionSet {
    pub fn degeneracy(&self) -> usize {
        self.configurations.len()
    }

    pub fn contains(&self, c: &Configuration) -> bool {
        self.configurations.binary_search(c).is_ok()
    }
}

fn check_cap(what: &str, n: usize, cap: usize) -> Result<()> {
    if n > cap || n > 63 {
        return Err(Error::SizeCap {
            what: what.to_string(),
            actual: n,
            cap: cap.min(63),
        });
    }
    Ok(())
}

struct Search<'a> {
    w: &'a [f64],
    adj: &'a [u64],
    n: usize,
    all: bool,
    best: f64,
    found: Vec<(f64, u64)>,
}

impl Search<'_> {
    fn run(&mut self, k: usize, sel: u64, blocked: u64, val: f64, rem: f64) {
        let slack = if self.all { DEGENERACY_TOL } else { -DEGENERACY_TOL };
        if val + rem < self.best - slack {
            return;
        }
        if k == self.n {
            if val > self.best + DEGENERACY_TOL || (!self.all && val > self.best) {
                self.best = val;
                self.found.retain(|&(v, _)| v >= val - DEGENERACY_TOL);
                if !self.all {
                    self.found.clear();
                }
                self.found.push((val, sel));
            } else if self.all && val >= self.best - DEGENERACY_TOL {
                self.best = self.best.max(val);
                self.found.push((val, sel));
            }
            return;
        }
        let wk = self.w[k];
        let free = (blocked >> k) & 1 == 0;
        let rem_next = if free { rem - wk } else { rem };
        if free {
            // Bound for the include branch: drop newly blocked weights.
            let newly = self.adj[k] & !blocked & !((1u64 << (k + 1)) - 1);
            let lost: f64 = bits_of(newly).map(|j| self.w[j]).sum();
            self.run(k + 1, sel | (1 << k), blocked | self.adj[k], val + wk, rem_next - lost);
        }
        self.run(k + 1, sel, blocked, val, rem_next);
    }
}

fn bits_of(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

/// Exact MWIS with the default cap of 30 vertices.
pub fn brute_force_mwis(graph: &MwisGraph, enumerate_all_optima: bool) -> Result<SolutionSet> {
    brute_force_mwis_capped(graph, enumerate_all_optima, DEFAULT_CAP)
}

/// Exact MWIS over independent sets with an explicit vertex cap.
pub fn brute_force_mwis_capped(graph: &MwisGraph, enumerate_all_optima: bool, cap: usize) -> Result<SolutionSet> {
    let n = graph.len();
    check_cap("MWIS graph", n, cap)?;
    let adj = graph.adjacency_masks().expect("cap keeps n ≤ 63");
    let w = graph.weights();

    // Fan out over the first few inclusion decisions.
    let depth = SPLIT_DEPTH.min(n);
    let mut prefixes = vec![(0u64, 0u64, 0.0f64)];
    for k in 0..depth {
        let mut next = Vec::with_capacity(prefixes.len() * 2);
        for &(sel, blocked, val) in &prefixes {
            if (blocked >> k) & 1 == 0 {
                next.push((sel | (1 << k), blocked | adj[k], val + w[k]));
            }
            next.push((sel, blocked, val));
        }
        prefixes = next;
    }
    let results: Vec<Vec<(f64, u64)>> = prefixes
        .par_iter()
        .map(|&(sel, blocked, val)| {
            let rem: f64 = (depth..n).filter(|&j| (blocked >> j) & 1 == 0).map(|j| w[j]).sum();
            let mut s = Search {
                w,
                adj: &adj,
                n,
                all: enumerate_all_optima,
                best: f64::NEG_INFINITY,
                found: Vec::new(),
            };
            s.run(depth, sel, blocked, val, rem);
            s.found
        })
        .collect();
    let merged: Vec<(f64, u64)> = results.into_iter().flatten().collect();
    finish_mwis(graph, merged, enumerate_all_optima)
}

fn finish_mwis(graph: &MwisGraph, found: Vec<(f64, u64)>, all: bool) -> Result<SolutionSet> {
    let n = graph.len();
    let best = found.iter().map(|x| x.0).fold(f64::NEG_INFINITY, f64::max);
    let mut configs: Vec<Configuration> = found
        .into_iter()
        .filter(|&(v, _)| v >= best - DEGENERACY_TOL)
        .map(|(_, m)| Configuration::from_mask(m, n))
        .collect();
    configs.sort();
    configs.dedup();
    if !all {
        configs.truncate(1);
    }
    let optimal_energy = configs
        .iter()
        .map(|c| mwis_cost(graph, c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(SolutionSet {
        optimal_energy,
        configurations: configs,
        search_space_size: 1u64 << n,
        pruned: true,
    })
}

/// Exhaustive minimisation of a diagonal energy `Σ a_i n_i + Σ b_ij n_i n_j`
/// given as linear terms and a dense symmetric coupling matrix.
fn enumerate_diagonal(linear: &[f64], couplings: &[Vec<f64>]) -> (f64, Vec<u64>) {
    let n = linear.len();
    if n == 0 {
        return (0.0, vec![0]);
    }
    // Threads take disjoint blocks of the top bits; each walks a Gray code
    // over the low bits.
    let top = n.min(6);
    let low = n - top;
    let blocks: Vec<(f64, Vec<u64>)> = (0..(1u64 << top))
        .into_par_iter()
        .map(|hi| {
            let base = hi << low;
            let mut state = base;
            let mut e = energy_of(linear, couplings, state);
            let mut best = e;
            let mut arg = vec![state];
            for step in 1..(1u64 << low) {
                let k = step.trailing_zeros() as usize;
                let on = (state >> k) & 1 == 0;
                let mut delta = linear[k];
                for j in bits_of(state & !(1 << k)) {
                    delta += couplings[k][j];
                }
                if on {
                    e += delta;
                } else {
                    e -= delta;
                }
                state ^= 1 << k;
                if e < best - DEGENERACY_TOL {
                    best = e;
                    arg.clear();
                    arg.push(state);
                } else if e <= best + DEGENERACY_TOL {
                    arg.push(state);
                    best = best.min(e);
                }
            }
            (best, arg)
        })
        .collect();
    let best = blocks.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let mut args: Vec<u64> = Vec::new();
    for (_, a) in blocks {
        args.extend(a);
    }
    // Recompute exactly and keep the true level.
    let exact: Vec<(f64, u64)> = args.into_iter().map(|m| (energy_of(linear, couplings, m), m)).collect();
    let best = exact.iter().map(|x| x.0).fold(best, f64::min);
    let keep = exact
        .into_iter()
        .filter(|&(e, _)| e <= best + DEGENERACY_TOL)
        .map(|x| x.1)
        .collect();
    (best, keep)
}

fn energy_of(linear: &[f64], couplings: &[Vec<f64>], m: u64) -> f64 {
    let mut e = 0.0;
    for i in bits_of(m) {
        e += linear[i];
        for j in bits_of(m >> (i + 1)) {
            e += couplings[i][i + 1 + j];
        }
    }
    e
}

fn to_solution(n: usize, energy: f64, masks: Vec<u64>) -> SolutionSet {
    let mut configurations: Vec<Configuration> = masks.into_iter().map(|m| Configuration::from_mask(m, n)).collect();
    configurations.sort();
    configurations.dedup();
    SolutionSet {
        optimal_energy: energy,
        configurations,
        search_space_size: 1u64 << n,
        pruned: false,
    }
}

/// Exact QUBO minimum over all `2^N` bitstrings (N ≤ 30).
pub fn brute_force_qubo(qubo: &QuboProblem) -> Result<SolutionSet> {
    let n = qubo.len();
    check_cap("QUBO", n, DEFAULT_CAP)?;
    let mut j = vec![vec![0.0; n]; n];
    for (&(a, b), &v) in qubo.couplings() {
        j[a][b] = v;
        j[b][a] = v;
    }
    let (e, masks) = enumerate_diagonal(qubo.linear(), &j);
    Ok(to_solution(n, e, masks))
}

/// Ground states of an embedded instance in the `Ω = 0` limit.
///
/// * `Ideal`: MWIS over the unit-disk graph of the layout (≤ 34 atoms).
/// * `Vdw`: `−Σ w_i n_i + Σ V(r_ij)/Δ₀ n_i n_j` over all bitstrings (≤ 24
///   atoms), with `Δ₀ = Δ_max / max w` converting MHz to weight units.
pub fn solve_embedded(
    embedding: &EmbeddedInstance,
    model: InteractionModel,
    params: &RydbergParams,
) -> Result<SolutionSet> {
    match model {
        InteractionModel::Ideal => {
            check_cap("embedded instance (ideal model)", embedding.len(), IDEAL_EMBEDDED_CAP)?;
            brute_force_mwis_capped(&embedding.graph()?, true, IDEAL_EMBEDDED_CAP)
        }
        InteractionModel::Vdw => {
            params.validate()?;
            let n = embedding.len();
            check_cap("embedded instance (vdw model)", n, VDW_EMBEDDED_CAP)?;
            let (linear, v) = vdw_energy_terms(embedding, params);
            let (e, masks) = enumerate_diagonal(&linear, &v);
            Ok(to_solution(n, e, masks))
        }
    }
}

/// Dimensionless linear terms and pair couplings of the vdW classical energy.
pub fn vdw_energy_terms(embedding: &EmbeddedInstance, params: &RydbergParams) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = embedding.len();
    let layout = embedding.layout();
    let weights = embedding.weights();
    let wmax = weights.iter().cloned().fold(0.0, f64::max);
    let scale = params.resolved_delta_max(layout.radius()) / wmax;
    let linear: Vec<f64> = weights.iter().map(|w| -w).collect();
    let mut v = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let x = params.interaction(layout.distance(i, j)) / scale;
            v[i][j] = x;
            v[j][i] = x;
        }
    }
    (linear, v)
}

/// Plain `2^N` scan of the penalised cost; test oracle for tiny graphs.
pub fn naive_mwis(graph: &MwisGraph) -> Result<SolutionSet> {
    let n = graph.len();
    check_cap("naive enumeration", n, 20)?;
    let mut best = f64::INFINITY;
    let mut arg = Vec::new();
    for m in 0..(1u64 << n) {
        let e = mwis_cost(graph, &Configuration::from_mask(m, n))?;
        if e < best - DEGENERACY_TOL {
            best = e;
            arg.clear();
            arg.push(m);
        } else if e <= best + DEGENERACY_TOL {
            arg.push(m);
            best = best.min(e);
        }
    }
    Ok(to_solution(n, best, arg))
}
