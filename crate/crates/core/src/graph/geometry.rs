use super::MwisGraph;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// How atom pairs interact when evaluating classical energies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InteractionModel {
    /// Hard blockade: penalty `U` strictly inside `R`, nothing outside.
    #[default]
    Ideal,
    /// Van der Waals `|C6|/r⁶` between every pair.
    Vdw,
}

/// Rydberg physics constants.
///
/// `c6` is in GHz·µm⁶ and may carry the sign of the physical coefficient;
/// only its magnitude enters blockade radii, interaction strengths and the
/// detuning cap. `omega` and `delta_max` are cyclic frequencies in MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RydbergParams {
    pub c6: f64,
    pub omega: f64,
    /// Largest per-site detuning; `None` means the cap `0.9·|C6|/R⁶`.
    #[serde(default)]
    pub delta_max: Option<f64>,
}

impl Default for RydbergParams {
    fn default() -> Self {
        RydbergParams {
            c6: -3376.0,
            omega: 1.0,
            delta_max: None,
        }
    }
}

impl RydbergParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c6.is_finite() && self.c6 != 0.0) {
            return Err(Error::input("C6 must be finite and non-zero"));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::input("Omega must be finite and non-negative"));
        }
        if let Some(d) = self.delta_max {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::input("Delta_max must be finite and positive"));
            }
        }
        Ok(())
    }

    /// |C6| in MHz·µm⁶.
    pub fn c6_mhz(&self) -> f64 {
        self.c6.abs() * 1e3
    }

    /// Interaction strength in MHz at distance `r` µm.
    pub fn interaction(&self, r: f64) -> f64 {
        self.c6_mhz() / r.powi(6)
    }

    /// `delta_max`, or the cap at radius `r` when unset.
    pub fn resolved_delta_max(&self, radius: f64) -> f64 {
        self.delta_max.unwrap_or_else(|| detuning_cap(self, radius))
    }
}

/// `0.9·|C6|/R⁶` in MHz.
pub fn detuning_cap(params: &RydbergParams, radius: f64) -> f64 {
    0.9 * params.interaction(radius)
}

/// `(|C6| / √(Ω² + Δ²))^{1/6}` in µm; `detuning` in MHz.
pub fn blockade_radius(params: &RydbergParams, detuning: f64) -> Result<f64> {
    params.validate()?;
    let rabi = (params.omega.powi(2) + detuning.powi(2)).sqrt();
    if rabi == 0.0 || !rabi.is_finite() {
        return Err(Error::Domain("blockade radius undefined for Omega = Delta = 0".into()));
    }
    Ok((params.c6_mhz() / rabi).powf(1.0 / 6.0))
}

/// Atom coordinates (µm), indexed like the vertices they place, plus the
/// unit-disk radius `R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometricLayout {
    positions: Vec<[f64; 2]>,
    radius: f64,
}

impl GeometricLayout {
    pub fn new(positions: Vec<[f64; 2]>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::input(format!("unit-disk radius {radius} must be positive")));
        }
        if let Some(k) = positions.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::input(format!("position {k} is not finite")));
        }
        Ok(GeometricLayout { positions, radius })
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// Pairs strictly closer than `R`.
    pub fn udg_edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.distance(i, j) < self.radius {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// One offending atom pair, reported by external id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairIssue {
    pub a: usize,
    pub b: usize,
    /// Distance in µm.
    pub distance: f64,
    /// Interaction in MHz (tail checks only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interaction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model: InteractionModel,
    /// Graph edges with `r ≥ R`.
    pub missing_edges: Vec<PairIssue>,
    /// Non-edges with `r < R`.
    pub unintended_edges: Vec<PairIssue>,
    /// Non-edges whose vdW tail reaches the smallest site detuning (vdw only).
    pub tail_violations: Vec<PairIssue>,
    /// Pairs within 1e−9·R of `R` (warnings, never edges).
    pub ties: Vec<PairIssue>,
    /// Non-edges closer than the soft 1.3·R clearance target (warnings).
    pub clearance_warnings: Vec<PairIssue>,
    pub max_detuning: f64,
    pub min_detuning: f64,
    pub detuning_cap: f64,
    pub detuning_cap_ok: bool,
}

impl ValidationReport {
    /// Hard validity: no missing/unintended edges, cap respected, and under
    /// the vdw model no tail violation.
    pub fn is_valid(&self) -> bool {
        self.missing_edges.is_empty()
            && self.unintended_edges.is_empty()
            && self.detuning_cap_ok
            && (self.model == InteractionModel::Ideal || self.tail_violations.is_empty())
    }
}

/// Soft clearance target for non-neighbours, in units of `R`.
pub const CLEARANCE_RATIO: f64 = 1.3;

/// Checks a layout against the graph it is meant to realise.
pub fn validate_geometry(
    layout: &GeometricLayout,
    graph: &MwisGraph,
    params: &RydbergParams,
    model: InteractionModel,
) -> Result<ValidationReport> {
    params.validate()?;
    if layout.len() < graph.len() {
        return Err(Error::input(format!(
            "layout has {} positions but the graph has {} vertices",
            layout.len(),
            graph.len()
        )));
    }
    let r_unit = layout.radius();
    let cap = detuning_cap(params, r_unit);
    let delta_max = params.resolved_delta_max(r_unit);
    let scale = delta_max / graph.max_weight().max(f64::MIN_POSITIVE);
    let min_detuning = graph.weights().iter().cloned().fold(f64::INFINITY, f64::min) * scale;
    let ids = graph.ids();
    let issue = |i: usize, j: usize, v: Option<f64>| PairIssue {
        a: ids[i],
        b: ids[j],
        distance: layout.distance(i, j),
        interaction: v,
    };
    let mut report = ValidationReport {
        model,
        missing_edges: vec![],
        unintended_edges: vec![],
        tail_violations: vec![],
        ties: vec![],
        clearance_warnings: vec![],
        max_detuning: delta_max,
        min_detuning,
        detuning_cap: cap,
        detuning_cap_ok: delta_max <= cap * (1.0 + 1e-12),
    };
    for i in 0..graph.len() {
        for j in i + 1..graph.len() {
            let r = layout.distance(i, j);
            let edge = graph.has_edge(i, j);
            if (r - r_unit).abs() <= 1e-9 * r_unit {
                report.ties.push(issue(i, j, None));
            }
            if edge && r >= r_unit {
                report.missing_edges.push(issue(i, j, None));
            }
            if !edge {
                if r < r_unit {
                    report.unintended_edges.push(issue(i, j, None));
                } else if r < CLEARANCE_RATIO * r_unit {
                    report.clearance_warnings.push(issue(i, j, None));
                }
                if model == InteractionModel::Vdw {
                    let v = params.interaction(r);
                    if v >= min_detuning {
                        report.tail_violations.push(issue(i, j, Some(v)));
                    }
                }
            }
        }
    }
    Ok(report)
}
