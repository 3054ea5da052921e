use crate::error::{Error, Result};
use crate::graph::{Configuration, MwisGraph};
use serde::{Deserialize, Serialize};

/// Default relative margin above the weight-rule bound in MWIS mode.
pub const DEFAULT_MARGIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GadgetKind {
    Wire,
    Triangle,
    Square,
    Crossing,
}

impl GadgetKind {
    /// Endpoint count: A-side then B-side (crossing: α, β, γ, δ).
    pub fn endpoint_count(self) -> usize {
        match self {
            GadgetKind::Wire => 2,
            GadgetKind::Triangle => 3,
            GadgetKind::Square | GadgetKind::Crossing => 4,
        }
    }

    /// How many endpoints sit on the A side of the chain.
    pub fn a_side(self) -> usize {
        match self {
            GadgetKind::Wire => 1,
            GadgetKind::Triangle | GadgetKind::Square => 2,
            GadgetKind::Crossing => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Mwis,
    Qubo,
}

/// How the ancilla weight is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    /// `c = bound·(1 + margin)`; `margin = 0` sits exactly on the bound.
    Mwis { margin: f64 },
    /// `c = J`.
    Qubo { j: f64 },
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling::Mwis { margin: DEFAULT_MARGIN }
    }
}

/// Parameters of one gadget.
///
/// Endpoint order: wire `[α, β]` (α next to the first chain atom);
/// triangle `[α, β, γ]` with the blockaded pair α, β on the A side;
/// square `[α, β, γ, δ]` with pairs (α, β) and (γ, δ) on either side;
/// crossing `[α, β, γ, δ]` where α–β and γ–δ are the two lines that cross.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireGadget {
    pub kind: GadgetKind,
    pub endpoint_weights: Vec<f64>,
    /// Chain atom count (4 ancillas for the crossing).
    pub length: usize,
    pub ancilla_weight: f64,
    pub mode: Mode,
}

/// Ancillas in the crossing core.
pub const CROSSING_ANCILLAS: usize = 4;

/// Endpoint pairs each crossing ancilla is adjacent to, in endpoint indices
/// (α=0, β=1, γ=2, δ=3). Walking the core visits α, γ, β, δ.
pub const CROSSING_ANCILLA_ENDS: [[usize; 2]; 4] = [[0, 2], [2, 1], [1, 3], [3, 0]];

fn check_weights(ws: &[f64]) -> Result<()> {
    for &w in ws {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::input(format!(
                "endpoint weight {w} must be finite and strictly positive"
            )));
        }
    }
    Ok(())
}

fn check_length(length: usize) -> Result<()> {
    if length < 2 || !length.is_multiple_of(2) {
        return Err(Error::input(format!(
            "chain length {length} must be even and at least 2"
        )));
    }
    Ok(())
}

fn ancilla_weight(bound: f64, coupling: Coupling) -> Result<(f64, Mode)> {
    match coupling {
        Coupling::Mwis { margin } => {
            if !(margin.is_finite() && margin >= 0.0) {
                return Err(Error::input(format!("margin {margin} must be ≥ 0")));
            }
            Ok((bound * (1.0 + margin), Mode::Mwis))
        }
        Coupling::Qubo { j } => {
            if !j.is_finite() || j < 0.0 {
                return Err(Error::Unsupported(format!(
                    "coupling J = {j}; only J ≥ 0 maps onto a wire"
                )));
            }
            Ok((j, Mode::Qubo))
        }
    }
}

fn build(kind: GadgetKind, ws: Vec<f64>, length: usize, coupling: Coupling) -> Result<WireGadget> {
    check_weights(&ws)?;
    check_length(length)?;
    let g = WireGadget {
        kind,
        endpoint_weights: ws,
        length,
        ancilla_weight: 0.0,
        mode: Mode::Mwis,
    };
    let (c, mode) = ancilla_weight(g.bound(), coupling)?;
    let g = WireGadget {
        ancilla_weight: c,
        mode,
        ..g
    };
    g.validate()?;
    Ok(g)
}

/// Two-endpoint wire.
pub fn build_wire(alpha: f64, beta: f64, length: usize, coupling: Coupling) -> Result<WireGadget> {
    build(GadgetKind::Wire, vec![alpha, beta], length, coupling)
}

/// Wire whose A side is the blockaded pair (α, β) and B side γ.
pub fn build_triangle_gadget(
    alpha: f64,
    beta: f64,
    gamma: f64,
    length: usize,
    coupling: Coupling,
) -> Result<WireGadget> {
    build(GadgetKind::Triangle, vec![alpha, beta, gamma], length, coupling)
}

/// Wire between the blockaded pairs (α, β) and (γ, δ).
pub fn build_square_gadget(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    length: usize,
    coupling: Coupling,
) -> Result<WireGadget> {
    build(GadgetKind::Square, vec![alpha, beta, gamma, delta], length, coupling)
}

/// Four-ancilla crossing for lines α–β and γ–δ; `c = (α+β+γ+δ)(1+margin)`.
pub fn build_crossing_gadget(alpha: f64, beta: f64, gamma: f64, delta: f64, margin: f64) -> Result<WireGadget> {
    let ws = vec![alpha, beta, gamma, delta];
    check_weights(&ws)?;
    let g = WireGadget {
        kind: GadgetKind::Crossing,
        endpoint_weights: ws,
        length: CROSSING_ANCILLAS,
        ancilla_weight: 0.0,
        mode: Mode::Mwis,
    };
    let (c, _) = ancilla_weight(g.bound(), Coupling::Mwis { margin })?;
    let g = WireGadget { ancilla_weight: c, ..g };
    g.validate()?;
    Ok(g)
}

/// Lowest energy of one logical sector of a gadget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorLevel {
    /// Endpoint bits in endpoint order.
    pub sector: Configuration,
    /// Minimal gadget energy (endpoints + ancillas).
    pub energy: f64,
    /// `energy − offset`.
    pub logical_energy: f64,
    /// Number of gadget configurations reaching `energy`.
    pub degeneracy: usize,
}

impl WireGadget {
    /// Weight-rule bound `c` must exceed in MWIS mode.
    pub fn bound(&self) -> f64 {
        let w = &self.endpoint_weights;
        match self.kind {
            GadgetKind::Wire => w[0] + w[1],
            GadgetKind::Triangle => w[0].max(w[1]) + w[2],
            GadgetKind::Square => w[0].max(w[1]) + w[2].max(w[3]),
            GadgetKind::Crossing => w.iter().sum(),
        }
    }

    /// Constant energy shift: `−L·c/2` for chains, `−c` for the crossing.
    pub fn offset(&self) -> f64 {
        match self.kind {
            GadgetKind::Crossing => -self.ancilla_weight,
            _ => -(self.length as f64) * self.ancilla_weight / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoint_weights.len() != self.kind.endpoint_count() {
            return Err(Error::input(format!(
                "{:?} gadget needs {} endpoint weights, got {}",
                self.kind,
                self.kind.endpoint_count(),
                self.endpoint_weights.len()
            )));
        }
        check_weights(&self.endpoint_weights)?;
        if self.kind == GadgetKind::Crossing {
            if self.length != CROSSING_ANCILLAS {
                return Err(Error::input("the crossing gadget has exactly 4 ancillas"));
            }
        } else {
            check_length(self.length)?;
        }
        let c = self.ancilla_weight;
        if !c.is_finite() || c < 0.0 {
            return Err(Error::input(format!("ancilla weight {c} is invalid")));
        }
        let rule = self.mode == Mode::Mwis || self.kind == GadgetKind::Crossing;
        let b = self.bound();
        if rule && !(c >= b * (1.0 - 1e-12) && c > 0.0) {
            return Err(Error::input(format!(
                "{:?} gadget: ancilla weight {c} violates the weight rule (bound {b})",
                self.kind
            )));
        }
        Ok(())
    }

    /// Atoms of the isolated gadget: endpoints first, then ancillas.
    pub fn atom_count(&self) -> usize {
        self.endpoint_weights.len() + self.length
    }

    /// Blockade graph of the isolated gadget (endpoints, then chain atoms in
    /// order from the A side).
    pub fn local_graph(&self) -> Result<MwisGraph> {
        let e = self.endpoint_weights.len();
        let l = self.length;
        let mut weights = self.endpoint_weights.clone();
        weights.extend(std::iter::repeat_n(self.ancilla_weight.max(f64::MIN_POSITIVE), l));
        let mut edges = Vec::new();
        match self.kind {
            GadgetKind::Crossing => {
                for (k, ends) in CROSSING_ANCILLA_ENDS.iter().enumerate() {
                    for &x in ends {
                        edges.push((e + k, x));
                    }
                    for m in k + 1..l {
                        edges.push((e + k, e + m));
                    }
                }
            }
            kind => {
                let a = kind.a_side();
                for i in 0..a {
                    edges.push((i, e));
                    for j in i + 1..a {
                        edges.push((i, j));
                    }
                }
                for i in a..e {
                    edges.push((i, e + l - 1));
                    for j in i + 1..e {
                        edges.push((i, j));
                    }
                }
                for k in 0..l - 1 {
                    edges.push((e + k, e + k + 1));
                }
            }
        }
        MwisGraph::new(weights, edges)
    }

    /// The logical structure the gadget stands for: K2, K3, K4, or two
    /// disjoint edges for the crossing.
    pub fn logical_graph(&self) -> Result<MwisGraph> {
        let edges = match self.kind {
            GadgetKind::Wire => vec![(0, 1)],
            GadgetKind::Triangle => vec![(0, 1), (0, 2), (1, 2)],
            GadgetKind::Square => vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            GadgetKind::Crossing => vec![(0, 1), (2, 3)],
        };
        MwisGraph::new(self.endpoint_weights.clone(), edges)
    }
}

/// Maximum independent set size of a path of `m` atoms and how many sets
/// reach it.
fn path_max_is(m: usize) -> (usize, usize) {
    // (size, ways) for best IS of the prefix ending unselected / selected.
    let mut off = (0usize, 1usize);
    let mut on: Option<(usize, usize)> = None;
    for _ in 0..m {
        let new_on = (off.0 + 1, off.1);
        let new_off = merge(Some(off), on).unwrap();
        off = new_off;
        on = Some(new_on);
    }
    merge(Some(off), on).unwrap()
}

fn merge(a: Option<(usize, usize)>, b: Option<(usize, usize)>) -> Option<(usize, usize)> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if x.0 > y.0 {
            x
        } else if y.0 > x.0 {
            y
        } else {
            (x.0, x.1 + y.1)
        }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Per-sector minimal energies of a gadget over all blockade-respecting
/// configurations, sorted by energy (ties by sector bits).
pub fn gadget_spectrum(gadget: &WireGadget) -> Result<Vec<SectorLevel>> {
    gadget.validate()?;
    let e = gadget.endpoint_weights.len();
    let w = &gadget.endpoint_weights;
    let c = gadget.ancilla_weight;
    let offset = gadget.offset();
    let mut out = Vec::new();
    for mask in 0u64..(1 << e) {
        let sel = |i: usize| (mask >> i) & 1 == 1;
        let base: f64 = (0..e).filter(|&i| sel(i)).map(|i| w[i]).sum();
        let level = match gadget.kind {
            GadgetKind::Crossing => {
                // Blockaded pairs inside the gadget: none among endpoints.
                let free = CROSSING_ANCILLA_ENDS
                    .iter()
                    .filter(|ends| !ends.iter().any(|&x| sel(x)))
                    .count();
                if free > 0 {
                    Some((-(base + c), free))
                } else {
                    Some((-base, 1))
                }
            }
            kind => {
                let a = kind.a_side();
                let a_on = (0..a).filter(|&i| sel(i)).count();
                let b_on = (a..e).filter(|&i| sel(i)).count();
                if a_on > 1 || b_on > 1 {
                    None
                } else {
                    let l = gadget.length;
                    let m = l - (a_on > 0) as usize - (b_on > 0) as usize;
                    let (k, ways) = path_max_is(m);
                    Some((-(base + c * k as f64), ways))
                }
            }
        };
        if let Some((energy, degeneracy)) = level {
            out.push(SectorLevel {
                sector: Configuration::from_mask(mask, e),
                energy,
                logical_energy: energy - offset,
                degeneracy,
            });
        }
    }
    out.sort_by(|x, y| x.energy.total_cmp(&y.energy).then_with(|| x.sector.cmp(&y.sector)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_independent_set, mwis_cost};

    fn level(spec: &[SectorLevel], bits: &str) -> SectorLevel {
        spec.iter().find(|s| s.sector.to_string() == bits).cloned().unwrap()
    }

    /// Spectrum by enumerating every bitstring of the local graph.
    fn brute_spectrum(g: &WireGadget) -> Vec<SectorLevel> {
        let lg = g.local_graph().unwrap();
        let n = lg.len();
        let e = g.endpoint_weights.len();
        let mut best: std::collections::BTreeMap<u64, (f64, usize)> = Default::default();
        for m in 0..(1u64 << n) {
            let cfg = Configuration::from_mask(m, n);
            if !is_independent_set(&lg, &cfg).unwrap() {
                continue;
            }
            let en = mwis_cost(&lg, &cfg).unwrap();
            let s = m & ((1 << e) - 1);
            let entry = best.entry(s).or_insert((f64::INFINITY, 0));
            if en < entry.0 - 1e-12 {
                *entry = (en, 1);
            } else if (en - entry.0).abs() <= 1e-12 {
                entry.1 += 1;
            }
        }
        best.into_iter()
            .map(|(s, (en, d))| SectorLevel {
                sector: Configuration::from_mask(s, e),
                energy: en,
                logical_energy: en - g.offset(),
                degeneracy: d,
            })
            .collect()
    }

    fn same(a: &[SectorLevel], b: &[SectorLevel]) {
        assert_eq!(a.len(), b.len());
        for x in a {
            let y = b.iter().find(|y| y.sector == x.sector).unwrap();
            assert!((x.energy - y.energy).abs() < 1e-12, "{x:?} vs {y:?}");
            assert_eq!(x.degeneracy, y.degeneracy, "{x:?}");
        }
    }

    #[test]
    fn wire_builder_values() {
        let g = build_wire(0.7, 0.3, 4, Coupling::default()).unwrap();
        assert!((g.ancilla_weight - 1.1).abs() < 1e-12);
        assert!((g.offset() + 2.2).abs() < 1e-12);
        assert!(build_wire(0.7, 0.3, 3, Coupling::default()).is_err());
        assert!(build_wire(0.7, 0.3, 0, Coupling::default()).is_err());
        assert!(matches!(
            build_wire(0.7, 0.3, 4, Coupling::Qubo { j: -0.1 }),
            Err(Error::Unsupported(_))
        ));
        let q = build_wire(0.7, 0.3, 6, Coupling::Qubo { j: 0.25 }).unwrap();
        assert_eq!(q.ancilla_weight, 0.25);
        assert_eq!(q.mode, Mode::Qubo);
    }

    #[test]
    fn minimal_wire_graph() {
        let g = build_wire(0.7, 0.3, 2, Coupling::default()).unwrap();
        let lg = g.local_graph().unwrap();
        assert_eq!(lg.len(), 4);
        assert_eq!(lg.edges(), &[(0, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn wire_sector_ordering() {
        let g = build_wire(0.7, 0.3, 4, Coupling::default()).unwrap();
        let s = gadget_spectrum(&g).unwrap();
        let order: Vec<String> = s.iter().map(|x| x.sector.to_string()).collect();
        assert_eq!(order, vec!["10", "01", "00", "11"]);
        assert!((level(&s, "10").logical_energy + 0.7).abs() < 1e-12);
        assert!((level(&s, "01").logical_energy + 0.3).abs() < 1e-12);
        assert!(level(&s, "00").logical_energy.abs() < 1e-12);
        assert!(level(&s, "11").logical_energy > 0.0);
    }

    #[test]
    fn wire_degeneracies_and_brute_force_agree() {
        for l in (2..=12).step_by(2) {
            let g = build_wire(0.7, 0.3, l, Coupling::default()).unwrap();
            let s = gadget_spectrum(&g).unwrap();
            assert_eq!(level(&s, "00").degeneracy, l / 2 + 1);
            assert_eq!(level(&s, "11").degeneracy, l / 2);
            assert_eq!(level(&s, "10").degeneracy, 1);
            same(&s, &brute_spectrum(&g));
        }
    }

    #[test]
    fn qubo_wire_matches_two_bit_qubo() {
        let (a, b, j) = (0.4, 0.55, 0.3);
        for l in [2, 4, 8] {
            let g = build_wire(a, b, l, Coupling::Qubo { j }).unwrap();
            let s = gadget_spectrum(&g).unwrap();
            assert!((level(&s, "11").logical_energy - (-a - b + j)).abs() < 1e-12);
            assert!((level(&s, "10").logical_energy + a).abs() < 1e-12);
            assert!((level(&s, "01").logical_energy + b).abs() < 1e-12);
            assert!(level(&s, "00").logical_energy.abs() < 1e-12);
        }
    }

    /// Every IS sector reproduces the direct cost; non-IS sectors sit above
    /// every IS sector.
    fn check_preservation(g: &WireGadget) {
        check_preservation_with(g, true)
    }

    /// At the bound (`margin = 0`) non-IS sectors may tie with the worst IS
    /// sector but never undercut it.
    fn check_preservation_with(g: &WireGadget, strict: bool) {
        let s = gadget_spectrum(g).unwrap();
        let logical = g.logical_graph().unwrap();
        let mut worst_is = f64::NEG_INFINITY;
        let mut best_non_is = f64::INFINITY;
        for lv in &s {
            if is_independent_set(&logical, &lv.sector).unwrap() {
                let direct = mwis_cost(&logical, &lv.sector).unwrap();
                assert!((lv.logical_energy - direct).abs() < 1e-12, "{lv:?}");
                worst_is = worst_is.max(direct);
            } else {
                best_non_is = best_non_is.min(lv.logical_energy);
            }
        }
        if strict {
            assert!(best_non_is > worst_is, "{best_non_is} vs {worst_is}");
        } else {
            assert!(best_non_is >= worst_is - 1e-12, "{best_non_is} vs {worst_is}");
        }
        same(&s, &brute_spectrum(g));
    }

    #[test]
    fn triangle_preserves_spectrum() {
        let g = build_triangle_gadget(0.22, 0.46, 0.22, 4, Coupling::default()).unwrap();
        assert!(g.ancilla_weight > 0.68);
        check_preservation(&g);
        let sym = build_triangle_gadget(0.3, 0.3, 0.3, 6, Coupling::default()).unwrap();
        assert!(sym.ancilla_weight > 0.6);
        check_preservation(&sym);
    }

    #[test]
    fn square_preserves_spectrum() {
        let g = build_square_gadget(0.22, 0.51, 0.48, 0.1, 6, Coupling::default()).unwrap();
        assert!(g.ancilla_weight > 0.99);
        check_preservation(&g);
        let eq = build_square_gadget(0.4, 0.4, 0.4, 0.4, 2, Coupling::default()).unwrap();
        assert!(eq.ancilla_weight > 0.8);
        check_preservation(&eq);
    }

    #[test]
    fn crossing_preserves_spectrum() {
        let g = build_crossing_gadget(0.4, 0.1, 0.4, 0.1, DEFAULT_MARGIN).unwrap();
        assert!(g.ancilla_weight > 1.0);
        assert!((g.offset() + g.ancilla_weight).abs() < 1e-15);
        check_preservation(&g);
        for ws in [[0.3, 0.2, 0.3, 0.2], [0.4, 0.2, 0.3, 0.1], [0.7, 0.1, 0.2, 0.9]] {
            check_preservation(&build_crossing_gadget(ws[0], ws[1], ws[2], ws[3], 0.05).unwrap());
            check_preservation_with(&build_crossing_gadget(ws[0], ws[1], ws[2], ws[3], 0.0).unwrap(), false);
        }
    }

    #[test]
    fn crossing_has_no_spurious_constraints() {
        let g = build_crossing_gadget(0.4, 0.1, 0.4, 0.1, DEFAULT_MARGIN).unwrap();
        let s = gadget_spectrum(&g).unwrap();
        // α with γ, α with δ, β with γ, β with δ are all allowed together.
        for bits in ["1010", "1001", "0110", "0101"] {
            let lv = level(&s, bits);
            assert!(lv.logical_energy < 0.0, "{bits}");
        }
        // Ground sector is {α, γ}, unique at these weights.
        assert_eq!(s[0].sector.to_string(), "1010");
        assert!(s[1].energy > s[0].energy + 1e-9);
    }

    #[test]
    fn crossing_symmetric_weights_are_degenerate() {
        let g = build_crossing_gadget(0.3, 0.3, 0.3, 0.3, DEFAULT_MARGIN).unwrap();
        let s = gadget_spectrum(&g).unwrap();
        let ground = s[0].energy;
        let n = s.iter().filter(|x| (x.energy - ground).abs() < 1e-12).count();
        assert_eq!(n, 4);
    }

    #[test]
    fn crossing_rejects_bad_weights() {
        assert!(build_crossing_gadget(0.4, 0.0, 0.4, 0.1, 0.1).is_err());
        let mut g = build_crossing_gadget(0.4, 0.1, 0.4, 0.1, 0.1).unwrap();
        g.ancilla_weight = 0.9;
        assert!(g.validate().is_err());
    }

    #[test]
    fn mwis_rule_enforced_on_validate() {
        let mut g = build_wire(0.5, 0.4, 2, Coupling::default()).unwrap();
        g.ancilla_weight = 0.8;
        assert!(g.validate().is_err());
        let boundary = build_wire(0.5, 0.4, 2, Coupling::Mwis { margin: 0.0 }).unwrap();
        assert!((boundary.ancilla_weight - 0.9).abs() < 1e-15);
    }
}
