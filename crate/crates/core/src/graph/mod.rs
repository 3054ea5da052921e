//! Weighted graphs, QUBO instances, bitstring configurations and the
//! classical cost functions evaluated on them.

mod geometry;

pub use geometry::{
    blockade_radius, detuning_cap, validate_geometry, GeometricLayout, InteractionModel, PairIssue, RydbergParams,
    ValidationReport,
};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

/// A bitstring over a declared, ordered index set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    bits: Vec<bool>,
}

impl Configuration {
    pub fn new(bits: Vec<bool>) -> Self {
        Configuration { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Configuration { bits: vec![false; n] }
    }

    /// Low `n` bits of `mask`, bit `i` ↦ entry `i`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Configuration {
            bits: (0..n).map(|i| (mask >> i) & 1 == 1).collect(),
        }
    }

    /// Packs the bits into a `u64`; `None` past 64 entries.
    pub fn to_mask(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(
            self.bits
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .fold(0u64, |m, (i, _)| m | (1 << i)),
        )
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    fn check_len(&self, n: usize, what: &str) -> Result<()> {
        if self.bits.len() != n {
            return Err(Error::input(format!(
                "configuration has {} bits but {what} has {n} entries",
                self.bits.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::input(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Configuration::new)
    }
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Weighted graph with a uniform blockade penalty `U` (overridable per edge).
///
/// Vertices are addressed by dense index `0..n`; the external ids from
/// problem files are kept alongside for reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct MwisGraph {
    ids: Vec<usize>,
    weights: Vec<f64>,
    edges: Vec<(usize, usize)>,
    penalty: f64,
    edge_penalties: BTreeMap<(usize, usize), f64>,
    adjacency: Vec<Vec<usize>>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl MwisGraph {
    /// Graph on vertices `0..weights.len()` with the default penalty `1 + Σw`.
    pub fn new(weights: Vec<f64>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let ids = (0..weights.len()).collect();
        Self::with_ids(ids, weights, edges)
    }

    /// Graph with explicit external ids; `edges` are given as dense indices.
    pub fn with_ids(ids: Vec<usize>, weights: Vec<f64>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let n = weights.len();
        if ids.len() != n {
            return Err(Error::input("id list and weight list differ in length"));
        }
        for (k, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::input(format!(
                    "vertex {} has weight {w}; weights must be finite and strictly positive",
                    ids[k]
                )));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::input(format!("duplicate vertex id {id}")));
            }
        }
        let mut es = Vec::with_capacity(edges.len());
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::input(format!("edge ({i},{j}) references a missing vertex")));
            }
            if i == j {
                return Err(Error::input(format!("self-loop on vertex {}", ids[i])));
            }
            es.push(ordered(i, j));
        }
        es.sort_unstable();
        es.dedup();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &es {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        let penalty = 1.0 + weights.iter().sum::<f64>();
        Ok(MwisGraph {
            ids,
            weights,
            edges: es,
            penalty,
            edge_penalties: BTreeMap::new(),
            adjacency,
        })
    }

    fn check_penalty(&self, u: f64) -> Result<()> {
        let wmax = self.max_weight();
        if !(u.is_finite() && u > wmax) {
            return Err(Error::input(format!(
                "penalty {u} must exceed the largest weight {wmax}"
            )));
        }
        Ok(())
    }

    /// Replaces the uniform penalty `U`.
    pub fn with_penalty(mut self, u: f64) -> Result<Self> {
        self.check_penalty(u)?;
        self.penalty = u;
        Ok(self)
    }

    /// Overrides `U` on one existing edge.
    pub fn with_edge_penalty(mut self, i: usize, j: usize, u: f64) -> Result<Self> {
        let e = ordered(i, j);
        if self.edges.binary_search(&e).is_err() {
            return Err(Error::input(format!("no edge ({i},{j}) to attach a penalty to")));
        }
        self.check_penalty(u)?;
        self.edge_penalties.insert(e, u);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn edge_penalties(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.edge_penalties
    }

    pub fn edge_penalty(&self, i: usize, j: usize) -> f64 {
        *self.edge_penalties.get(&ordered(i, j)).unwrap_or(&self.penalty)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&ordered(i, j)).is_ok()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    /// Dense index of an external id.
    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    /// Neighbourhood bitmasks; `None` past 64 vertices.
    pub fn adjacency_masks(&self) -> Option<Vec<u64>> {
        if self.len() > 64 {
            return None;
        }
        Some(
            self.adjacency
                .iter()
                .map(|nb| nb.iter().fold(0u64, |m, &j| m | (1 << j)))
                .collect(),
        )
    }

    /// Same graph without edge `(i, j)`.
    pub fn without_edge(&self, i: usize, j: usize) -> Result<Self> {
        let e = ordered(i, j);
        let edges = self.edges.iter().copied().filter(|&x| x != e).collect();
        let mut g = Self::with_ids(self.ids.clone(), self.weights.clone(), edges)?;
        g.penalty = self.penalty;
        g.edge_penalties = self.edge_penalties.clone();
        g.edge_penalties.remove(&e);
        Ok(g)
    }
}

/// `−Σ w_i n_i + Σ_{(i,j)∈E} U_ij n_i n_j`.
pub fn mwis_cost(graph: &MwisGraph, config: &Configuration) -> Result<f64> {
    config.check_len(graph.len(), "graph")?;
    let mut e = 0.0;
    for i in config.ones() {
        e -= graph.weights[i];
    }
    for &(i, j) in &graph.edges {
        if config.get(i) && config.get(j) {
            e += graph.edge_penalty(i, j);
        }
    }
    Ok(e)
}

/// True iff no edge has both endpoints selected.
pub fn is_independent_set(graph: &MwisGraph, config: &Configuration) -> Result<bool> {
    config.check_len(graph.len(), "graph")?;
    Ok(graph.edges.iter().all(|&(i, j)| !(config.get(i) && config.get(j))))
}

/// QUBO in the encodable class: every `h_i < 0`, every `J_ij ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuboProblem {
    ids: Vec<usize>,
    linear: Vec<f64>,
    couplings: BTreeMap<(usize, usize), f64>,
}

impl QuboProblem {
    pub fn new(linear: Vec<f64>, couplings: Vec<((usize, usize), f64)>) -> Result<Self> {
        let ids = (0..linear.len()).collect();
        Self::with_ids(ids, linear, couplings)
    }

    /// `couplings` are keyed by dense index.
    pub fn with_ids(ids: Vec<usize>, linear: Vec<f64>, couplings: Vec<((usize, usize), f64)>) -> Result<Self> {
        let n = linear.len();
        if ids.len() != n {
            return Err(Error::input("id list and linear list differ in length"));
        }
        for (k, &h) in linear.iter().enumerate() {
            if !h.is_finite() {
                return Err(Error::input(format!("h for variable {} is not finite", ids[k])));
            }
            if h >= 0.0 {
                return Err(Error::Unsupported(format!(
                    "h_{} = {h}; only strictly negative linear terms are encodable",
                    ids[k]
                )));
            }
        }
        let mut map = BTreeMap::new();
        for ((i, j), v) in couplings {
            if i >= n || j >= n || i == j {
                return Err(Error::input(format!("coupling ({i},{j}) is not a valid pair")));
            }
            if !v.is_finite() {
                return Err(Error::input(format!("coupling ({i},{j}) is not finite")));
            }
            if v < 0.0 {
                return Err(Error::Unsupported(format!(
                    "J_{}{} = {v}; only non-negative couplings are encodable",
                    ids[i], ids[j]
                )));
            }
            if map.insert(ordered(i, j), v).is_some() {
                return Err(Error::input(format!("coupling ({i},{j}) given twice")));
            }
        }
        Ok(QuboProblem {
            ids,
            linear,
            couplings: map,
        })
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn is_empty(&self) -> bool {
        self.linear.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn couplings(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        *self.couplings.get(&ordered(i, j)).unwrap_or(&0.0)
    }

    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.ids.iter().position(|&x| x == id)
    }

    /// Sub-problem on the given dense indices (in that order).
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let ids = keep.iter().map(|&i| self.ids[i]).collect();
        let linear = keep.iter().map(|&i| self.linear[i]).collect();
        let couplings = self
            .couplings
            .iter()
            .filter_map(|(&(i, j), &v)| Some(((*pos.get(&i)?, *pos.get(&j)?), v)))
            .collect();
        Self::with_ids(ids, linear, couplings)
    }
}

/// `Σ h_i n_i + Σ J_ij n_i n_j`.
pub fn qubo_cost(qubo: &QuboProblem, config: &Configuration) -> Result<f64> {
    config.check_len(qubo.len(), "QUBO")?;
    let mut e: f64 = config.ones().map(|i| qubo.linear[i]).sum();
    for (&(i, j), &v) in &qubo.couplings {
        if config.get(i) && config.get(j) {
            e += v;
        }
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(s: &str) -> Configuration {
        s.parse().unwrap()
    }

    #[test]
    fn single_vertex_cost() {
        let g = MwisGraph::new(vec![0.5], vec![]).unwrap();
        assert_eq!(mwis_cost(&g, &bits("1")).unwrap(), -0.5);
    }

    #[test]
    fn edge_penalty_cost() {
        let g = MwisGraph::new(vec![0.3, 0.4], vec![(0, 1)])
            .unwrap()
            .with_penalty(1.0)
            .unwrap();
        assert!((mwis_cost(&g, &bits("11")).unwrap() - 0.3).abs() < 1e-12);
        assert!(!is_independent_set(&g, &bits("11")).unwrap());
        assert!(is_independent_set(&g, &bits("00")).unwrap());
    }

    #[test]
    fn per_edge_override() {
        let g = MwisGraph::new(vec![0.3, 0.4, 0.5], vec![(0, 1), (1, 2)])
            .unwrap()
            .with_edge_penalty(2, 1, 5.0)
            .unwrap();
        assert_eq!(g.edge_penalty(1, 2), 5.0);
        let e = mwis_cost(&g, &bits("011")).unwrap();
        assert!((e - (-0.9 + 5.0)).abs() < 1e-12);
        assert!(g.clone().with_edge_penalty(0, 2, 5.0).is_err());
    }

    #[test]
    fn constructor_rejections() {
        assert!(MwisGraph::new(vec![0.0], vec![]).is_err());
        assert!(MwisGraph::new(vec![-0.1], vec![]).is_err());
        assert!(MwisGraph::new(vec![0.1, 0.2], vec![(0, 0)]).is_err());
        assert!(MwisGraph::new(vec![0.1, 0.2], vec![(0, 2)]).is_err());
        let g = MwisGraph::new(vec![0.1, 0.9], vec![(0, 1)]).unwrap();
        assert!(g.clone().with_penalty(0.9).is_err());
        assert!(g.with_penalty(0.91).is_ok());
        assert!(matches!(
            QuboProblem::new(vec![0.1], vec![]),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            QuboProblem::new(vec![-0.1, -0.2], vec![((0, 1), -0.5)]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn length_mismatch_is_input_error() {
        let g = MwisGraph::new(vec![0.3, 0.4], vec![(0, 1)]).unwrap();
        assert!(matches!(mwis_cost(&g, &bits("1")), Err(Error::Input(_))));
        assert!(is_independent_set(&g, &bits("111")).is_err());
        let q = QuboProblem::new(vec![-0.3], vec![]).unwrap();
        assert!(qubo_cost(&q, &bits("10")).is_err());
    }

    #[test]
    fn qubo_two_bit_matches_wire_form() {
        let q = QuboProblem::new(vec![-0.6, -0.25], vec![((0, 1), 0.4)]).unwrap();
        assert_eq!(qubo_cost(&q, &bits("00")).unwrap(), 0.0);
        let e = qubo_cost(&q, &bits("11")).unwrap();
        assert!((e - (-0.6 - 0.25 + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn restrict_keeps_ids_and_couplings() {
        let q = QuboProblem::new(
            vec![-0.1, -0.2, -0.3],
            vec![((0, 1), 0.5), ((1, 2), 0.7), ((0, 2), 0.9)],
        )
        .unwrap();
        let r = q.restrict(&[2, 0]).unwrap();
        assert_eq!(r.ids(), &[2, 0]);
        assert_eq!(r.coupling(0, 1), 0.9);
        assert_eq!(r.linear(), &[-0.3, -0.1]);
    }

    #[test]
    fn bitstring_round_trip() {
        let c = bits("01101");
        assert_eq!(c.to_string(), "01101");
        assert_eq!(Configuration::from_mask(c.to_mask().unwrap(), 5), c);
        assert!("01x".parse::<Configuration>().is_err());
        let j = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Configuration>(&j).unwrap(), c);
    }

    fn random_graph() -> impl Strategy<Value = MwisGraph> {
        (1usize..=10)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec(0.01f64..1.0, n),
                    prop::collection::vec((0..n, 0..n), 0..(n * 2)),
                )
            })
            .prop_map(|(w, e)| {
                let e = e.into_iter().filter(|(i, j)| i != j).collect();
                MwisGraph::new(w, e).unwrap()
            })
    }

    proptest! {
        #[test]
        fn is_cost_is_minus_selected_weight(g in random_graph(), mask in any::<u64>()) {
            let c = Configuration::from_mask(mask, g.len());
            let e = mwis_cost(&g, &c).unwrap();
            if is_independent_set(&g, &c).unwrap() {
                let s: f64 = c.ones().map(|i| g.weights()[i]).sum();
                prop_assert!((e + s).abs() < 1e-12);
            } else {
                prop_assert!(e > -g.weights().iter().sum::<f64>() + g.penalty() - 1e-12);
            }
        }

        #[test]
        fn global_argmin_is_independent(g in random_graph()) {
            let n = g.len();
            let mut best = (f64::INFINITY, 0u64);
            for m in 0..(1u64 << n) {
                let e = mwis_cost(&g, &Configuration::from_mask(m, n)).unwrap();
                if e < best.0 { best = (e, m); }
            }
            prop_assert!(is_independent_set(&g, &Configuration::from_mask(best.1, n)).unwrap());
        }
    }
}
