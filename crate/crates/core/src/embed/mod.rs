//! Compiling logical MWIS/QUBO problems into unit-disk atom layouts.

pub mod gadget;
pub mod routing;

pub use gadget::{
    build_crossing_gadget, build_square_gadget, build_triangle_gadget, build_wire, gadget_spectrum, Coupling,
    GadgetKind, Mode, SectorLevel, WireGadget, CROSSING_ANCILLAS, CROSSING_ANCILLA_ENDS, DEFAULT_MARGIN,
};
pub use routing::{Leg, Point};

use crate::error::{Error, Result};
use crate::graph::{
    mwis_cost, qubo_cost, validate_geometry, Configuration, GeometricLayout, InteractionModel, MwisGraph, QuboProblem,
    RydbergParams, ValidationReport,
};
use crate::solver::{brute_force_mwis, brute_force_qubo, SolutionSet};
use routing::{centroid, circle, dist, place_along, relax_layout, segments_cross, straight_leg, PairTarget};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Unit-disk radius used when neither the hints nor the caller give one.
pub const DEFAULT_RADIUS: f64 = 8.0;
/// Auto-routed chain spacing in units of `R`.
pub const DEFAULT_SPACING_RATIO: f64 = 0.8;

/// The user's original problem.
#[derive(Clone, Debug, PartialEq)]
pub enum LogicalProblem {
    Mwis(MwisGraph),
    Qubo(QuboProblem),
}

impl LogicalProblem {
    pub fn len(&self) -> usize {
        match self {
            LogicalProblem::Mwis(g) => g.len(),
            LogicalProblem::Qubo(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> &[usize] {
        match self {
            LogicalProblem::Mwis(g) => g.ids(),
            LogicalProblem::Qubo(q) => q.ids(),
        }
    }

    /// Atom weight of each logical vertex: `w_i` or `|h_i|`.
    pub fn atom_weights(&self) -> Vec<f64> {
        match self {
            LogicalProblem::Mwis(g) => g.weights().to_vec(),
            LogicalProblem::Qubo(q) => q.linear().iter().map(|h| h.abs()).collect(),
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            LogicalProblem::Mwis(_) => Mode::Mwis,
            LogicalProblem::Qubo(_) => Mode::Qubo,
        }
    }

    /// Pairs that must be realised (edges, or couplings with `J > 0`), as
    /// dense indices.
    pub fn interacting_pairs(&self) -> Vec<(usize, usize)> {
        match self {
            LogicalProblem::Mwis(g) => g.edges().to_vec(),
            LogicalProblem::Qubo(q) => q
                .couplings()
                .iter()
                .filter(|(_, &v)| v > 0.0)
                .map(|(&k, _)| k)
                .collect(),
        }
    }

    /// Cost of a logical configuration (penalised MWIS cost or QUBO cost).
    pub fn energy(&self, config: &Configuration) -> Result<f64> {
        match self {
            LogicalProblem::Mwis(g) => mwis_cost(g, config),
            LogicalProblem::Qubo(q) => qubo_cost(q, config),
        }
    }

    /// Exact optima with every degenerate solution listed.
    pub fn solve(&self) -> Result<SolutionSet> {
        match self {
            LogicalProblem::Mwis(g) => brute_force_mwis(g, true),
            LogicalProblem::Qubo(q) => brute_force_qubo(q),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Role {
    /// Carries logical vertex `vertex` (external id).
    Logical { vertex: usize },
    /// Atom `index` of gadget `gadget`.
    Ancilla { gadget: usize, index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub id: usize,
    pub weight: f64,
    pub role: Role,
}

/// A gadget placed in an embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedGadget {
    pub name: String,
    pub gadget: WireGadget,
    /// Atom ids of the endpoints, in gadget endpoint order.
    pub endpoints: Vec<usize>,
    /// Atom ids of the gadget's own atoms, in chain order.
    pub ancillas: Vec<usize>,
    /// Logical vertex-id pairs the gadget realises.
    pub covers: Vec<(usize, usize)>,
}

/// Declared route for one gadget.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GadgetRoute {
    pub kind: Option<GadgetKind>,
    /// Logical vertex ids: `[A-side ids, B-side ids]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ends: Vec<Vec<usize>>,
    /// Chain legs in order from the A side. Empty: straight auto route.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub legs: Vec<Leg>,
    /// Index (among the declared crossings) of the crossing this wire
    /// passes through between its first and second leg.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via: Option<usize>,
    /// Crossing core centre (µm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Point>,
    /// Distance of the crossing ancillas from the centre (µm).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_radius: Option<f64>,
}

/// Layout hints: logical positions, declared gadgets, and edges the user
/// wants routed through wires regardless of geometry.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoutingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty", with = "crate::io::id_map")]
    pub positions: BTreeMap<usize, Point>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gadgets: Vec<GadgetRoute>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub long_range: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbedOptions {
    pub margin: f64,
    pub spacing_ratio: f64,
    /// Used when the hints carry no radius.
    pub radius: f64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            margin: DEFAULT_MARGIN,
            spacing_ratio: DEFAULT_SPACING_RATIO,
            radius: DEFAULT_RADIUS,
        }
    }
}

/// A unit-disk MWIS instance realising a logical problem.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedInstance {
    problem: LogicalProblem,
    atoms: Vec<Atom>,
    layout: GeometricLayout,
    gadgets: Vec<PlacedGadget>,
    logical_map: Vec<usize>,
    energy_offset: f64,
    intended_edges: Vec<(usize, usize)>,
}

impl EmbeddedInstance {
    /// Assembles an instance and checks the mapping invariants.
    pub fn from_parts(
        problem: LogicalProblem,
        atoms: Vec<Atom>,
        layout: GeometricLayout,
        gadgets: Vec<PlacedGadget>,
        intended_edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = atoms.len();
        if layout.len() != n {
            return Err(Error::input(format!("{} atoms but {} positions", n, layout.len())));
        }
        for (k, a) in atoms.iter().enumerate() {
            if a.id != k {
                return Err(Error::input(format!("atom ids must be 0..{n} in order")));
            }
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(Error::input(format!("atom {k} has weight {}", a.weight)));
            }
        }
        let mut logical_map = vec![usize::MAX; problem.len()];
        let mut owner = vec![None; n];
        for a in &atoms {
            match a.role {
                Role::Logical { vertex } => {
                    let v = problem
                        .ids()
                        .iter()
                        .position(|&x| x == vertex)
                        .ok_or_else(|| Error::input(format!("atom {} maps to unknown vertex {vertex}", a.id)))?;
                    if logical_map[v] != usize::MAX {
                        return Err(Error::input(format!("vertex {vertex} maps to two atoms")));
                    }
                    logical_map[v] = a.id;
                }
                Role::Ancilla { gadget, .. } => {
                    if gadget >= gadgets.len() {
                        return Err(Error::input(format!("atom {} names missing gadget {gadget}", a.id)));
                    }
                    owner[a.id] = Some(gadget);
                }
            }
        }
        if let Some(v) = logical_map.iter().position(|&x| x == usize::MAX) {
            return Err(Error::input(format!("logical vertex {} has no atom", problem.ids()[v])));
        }
        for (k, g) in gadgets.iter().enumerate() {
            g.gadget.validate()?;
            if g.ancillas.len() != g.gadget.length {
                return Err(Error::input(format!("gadget {} lists a wrong atom count", g.name)));
            }
            for &a in &g.ancillas {
                if a >= n || owner[a] != Some(k) {
                    return Err(Error::input(format!(
                        "atom {a} is listed by gadget {} but not owned by it",
                        g.name
                    )));
                }
            }
        }
        for &(i, j) in &intended_edges {
            if i >= n || j >= n || i == j {
                return Err(Error::input(format!("intended edge ({i},{j}) is invalid")));
            }
        }
        let energy_offset = gadgets.iter().map(|g| g.gadget.offset()).sum();
        Ok(EmbeddedInstance {
            problem,
            atoms,
            layout,
            gadgets,
            logical_map,
            energy_offset,
            intended_edges,
        })
    }

    pub fn problem(&self) -> &LogicalProblem {
        &self.problem
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn layout(&self) -> &GeometricLayout {
        &self.layout
    }

    pub fn gadgets(&self) -> &[PlacedGadget] {
        &self.gadgets
    }

    /// Atom id of each logical vertex (dense order).
    pub fn logical_map(&self) -> &[usize] {
        &self.logical_map
    }

    pub fn energy_offset(&self) -> f64 {
        self.energy_offset
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    /// Edges the construction intends (logical direct edges and gadget
    /// couplings).
    pub fn intended_edges(&self) -> &[(usize, usize)] {
        &self.intended_edges
    }

    pub fn ancilla_count(&self) -> usize {
        self.atoms.len() - self.logical_map.len()
    }

    /// The unit-disk MWIS graph the layout actually induces.
    pub fn graph(&self) -> Result<MwisGraph> {
        MwisGraph::new(self.weights(), self.layout.udg_edges())
    }

    /// The graph the construction intends, for geometry validation.
    pub fn intended_graph(&self) -> Result<MwisGraph> {
        MwisGraph::new(self.weights(), self.intended_edges.clone())
    }

    pub fn validate(&self, params: &RydbergParams, model: InteractionModel) -> Result<ValidationReport> {
        validate_geometry(&self.layout, &self.intended_graph()?, params, model)
    }

    /// Name of whatever owns an atom, for error messages.
    pub fn owner_name(&self, atom: usize) -> String {
        match self.atoms[atom].role {
            Role::Logical { vertex } => format!("logical vertex {vertex}"),
            Role::Ancilla { gadget, index } => format!("{} (atom {index})", self.gadgets[gadget].name),
        }
    }
}

/// Sub-bitstring at the logical atoms, in logical vertex order.
pub fn extract_logical(embedding: &EmbeddedInstance, config: &Configuration) -> Result<Configuration> {
    if config.len() != embedding.len() {
        return Err(Error::input(format!(
            "configuration has {} bits, embedding has {} atoms",
            config.len(),
            embedding.len()
        )));
    }
    Ok(Configuration::new(
        embedding.logical_map.iter().map(|&a| config.get(a)).collect(),
    ))
}

struct Pending {
    kind: GadgetKind,
    ends: [Vec<usize>; 2],
    legs: Vec<Leg>,
    via: Option<usize>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn route_name(kind: GadgetKind, ends: &[Vec<usize>; 2], ids: &[usize]) -> String {
    let side = |v: &Vec<usize>| v.iter().map(|&i| ids[i].to_string()).collect::<Vec<_>>().join(",");
    format!("{:?}[{}|{}]", kind, side(&ends[0]), side(&ends[1])).to_lowercase()
}

/// Compiles a logical problem into an embedded instance.
///
/// Declared gadgets in `hints` are honoured as given; remaining interacting
/// pairs become direct unit-disk edges when their endpoints sit closer than
/// `R` (MWIS only) and straight auto-routed wires otherwise. Without
/// positions, logical vertices are laid out by penalty relaxation and edges
/// that cannot be kept short are reclassified as long-range one at a time.
pub fn embed(problem: &LogicalProblem, hints: &RoutingSpec, opts: &EmbedOptions) -> Result<EmbeddedInstance> {
    let radius = hints.radius.unwrap_or(opts.radius);
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::input(format!("unit-disk radius {radius} must be positive")));
    }
    if !(opts.spacing_ratio > 0.0 && opts.spacing_ratio < 1.0) {
        return Err(Error::input(format!(
            "spacing ratio {} must lie in (0, 1)",
            opts.spacing_ratio
        )));
    }
    let spacing = opts.spacing_ratio * radius;
    let n = problem.len();
    let ids = problem.ids().to_vec();
    let index = |id: usize| -> Result<usize> {
        ids.iter()
            .position(|&x| x == id)
            .ok_or_else(|| Error::input(format!("hint references unknown vertex {id}")))
    };
    let mode = problem.mode();
    let required: BTreeSet<(usize, usize)> = problem.interacting_pairs().into_iter().collect();
    let weights = problem.atom_weights();

    // Declared gadgets.
    let mut pending: Vec<Pending> = Vec::new();
    let mut crossings: Vec<(Point, f64)> = Vec::new();
    let mut covered: BTreeMap<(usize, usize), String> = BTreeMap::new();
    let mut must_be_direct: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (k, route) in hints.gadgets.iter().enumerate() {
        let kind = route
            .kind
            .ok_or_else(|| Error::input(format!("gadget hint {k} has no kind")))?;
        if kind == GadgetKind::Crossing {
            let center = route
                .center
                .ok_or_else(|| Error::input(format!("crossing hint {k} has no center")))?;
            let core = route
                .core_radius
                .ok_or_else(|| Error::input(format!("crossing hint {k} has no core_radius")))?;
            crossings.push((center, core));
            continue;
        }
        if route.ends.len() != 2 {
            return Err(Error::input(format!("gadget hint {k} needs two end groups")));
        }
        let a: Vec<usize> = route.ends[0].iter().map(|&x| index(x)).collect::<Result<_>>()?;
        let b: Vec<usize> = route.ends[1].iter().map(|&x| index(x)).collect::<Result<_>>()?;
        let want = match kind {
            GadgetKind::Wire => (1, 1),
            GadgetKind::Triangle => (2, 1),
            GadgetKind::Square => (2, 2),
            GadgetKind::Crossing => unreachable!(),
        };
        if (a.len(), b.len()) != want {
            return Err(Error::input(format!(
                "{kind:?} hint {k} needs end groups of sizes {want:?}"
            )));
        }
        if mode == Mode::Qubo && kind != GadgetKind::Wire {
            return Err(Error::Unsupported(format!(
                "{kind:?} gadgets blockade their end pairs, which a QUBO cannot express; use pairwise wires"
            )));
        }
        let ends = [a, b];
        let name = route_name(kind, &ends, &ids);
        for group in &ends {
            for (x, &i) in group.iter().enumerate() {
                for &j in &group[x + 1..] {
                    if !required.contains(&ordered(i, j)) {
                        return Err(Error::input(format!(
                            "{name}: end pair ({},{}) is not an edge of the problem",
                            ids[i], ids[j]
                        )));
                    }
                    must_be_direct.insert(ordered(i, j));
                }
            }
        }
        for &i in &ends[0] {
            for &j in &ends[1] {
                let e = ordered(i, j);
                if !required.contains(&e) {
                    return Err(Error::input(format!(
                        "{name}: pair ({},{}) is not an interacting pair of the problem",
                        ids[i], ids[j]
                    )));
                }
                if let Some(prev) = covered.insert(e, name.clone()) {
                    return Err(Error::input(format!(
                        "pair ({},{}) is covered by both {prev} and {name}",
                        ids[i], ids[j]
                    )));
                }
            }
        }
        if route.via.is_some() && route.legs.len() != 2 {
            return Err(Error::input(format!(
                "{name}: a wire through a crossing needs exactly two legs"
            )));
        }
        pending.push(Pending {
            kind,
            ends,
            legs: route.legs.clone(),
            via: route.via,
        });
    }
    for p in &pending {
        if let Some(v) = p.via {
            if v >= crossings.len() {
                return Err(Error::input(format!("via index {v} names no declared crossing")));
            }
        }
    }
    if let Some(e) = must_be_direct.iter().find(|e| covered.contains_key(e)) {
        return Err(Error::input(format!(
            "pair ({},{}) is both an end pair and gadget-covered",
            ids[e.0], ids[e.1]
        )));
    }

    let mut forced_long: BTreeSet<(usize, usize)> = BTreeSet::new();
    for pair in &hints.long_range {
        let e = ordered(index(pair[0])?, index(pair[1])?);
        if !required.contains(&e) {
            return Err(Error::input(format!(
                "long-range override ({},{}) is not an interacting pair",
                pair[0], pair[1]
            )));
        }
        if must_be_direct.contains(&e) {
            return Err(Error::input(format!(
                "long-range override ({},{}) conflicts with a gadget end pair",
                pair[0], pair[1]
            )));
        }
        if !covered.contains_key(&e) {
            forced_long.insert(e);
        }
    }

    // Logical positions.
    let positions: Vec<Point> = if hints.positions.is_empty() {
        auto_layout(problem, &required, &covered, &must_be_direct, &mut forced_long, radius)?
    } else {
        ids.iter()
            .map(|id| {
                hints
                    .positions
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::input(format!("layout hint lacks a position for vertex {id}")))
            })
            .collect::<Result<_>>()?
    };

    // Remaining pairs: direct or auto wire.
    let mut direct: Vec<(usize, usize)> = Vec::new();
    for &e in &required {
        if covered.contains_key(&e) {
            continue;
        }
        let long = mode == Mode::Qubo || forced_long.contains(&e) || dist(positions[e.0], positions[e.1]) >= radius;
        if must_be_direct.contains(&e) || !long {
            direct.push(e);
            continue;
        }
        let ends = [vec![e.0], vec![e.1]];
        covered.insert(e, route_name(GadgetKind::Wire, &ends, &ids));
        pending.push(Pending {
            kind: GadgetKind::Wire,
            ends,
            legs: vec![],
            via: None,
        });
    }

    // Atoms.
    let mut atoms: Vec<Atom> = (0..n)
        .map(|v| Atom {
            id: v,
            weight: weights[v],
            role: Role::Logical { vertex: ids[v] },
        })
        .collect();
    let mut pos: Vec<Point> = positions.clone();
    let mut edges: Vec<(usize, usize)> = direct.clone();
    let mut gadgets: Vec<PlacedGadget> = Vec::new();
    let mut leg_atoms: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut polylines: Vec<(usize, Vec<Point>)> = Vec::new();

    for p in &pending {
        let name = route_name(p.kind, &p.ends, &ids);
        let legs = if p.legs.is_empty() {
            let from = centroid(&p.ends[0].iter().map(|&i| positions[i]).collect::<Vec<_>>());
            let to = centroid(&p.ends[1].iter().map(|&i| positions[i]).collect::<Vec<_>>());
            if dist(from, to) <= 0.0 {
                return Err(Error::Embedding {
                    gadget: name,
                    reason: "end groups coincide".into(),
                });
            }
            vec![straight_leg(from, to, spacing, radius)?]
        } else {
            p.legs.clone()
        };
        let length: usize = legs.iter().map(|l| l.atoms).sum();
        if length < 2 || !length.is_multiple_of(2) {
            return Err(Error::Embedding {
                gadget: name,
                reason: format!("chain of {length} atoms; wires need an even count ≥ 2"),
            });
        }
        let ew: Vec<f64> = p.ends.iter().flatten().map(|&i| weights[i]).collect();
        let coupling = match problem {
            LogicalProblem::Mwis(_) => Coupling::Mwis { margin: opts.margin },
            LogicalProblem::Qubo(q) => Coupling::Qubo {
                j: q.coupling(p.ends[0][0], p.ends[1][0]),
            },
        };
        let gadget = match p.kind {
            GadgetKind::Wire => build_wire(ew[0], ew[1], length, coupling),
            GadgetKind::Triangle => build_triangle_gadget(ew[0], ew[1], ew[2], length, coupling),
            GadgetKind::Square => build_square_gadget(ew[0], ew[1], ew[2], ew[3], length, coupling),
            GadgetKind::Crossing => unreachable!(),
        }?;
        let gid = gadgets.len();
        let mut chain = Vec::with_capacity(length);
        let mut per_leg = Vec::new();
        for leg in &legs {
            let pts = place_along(&leg.path, leg.atoms).map_err(|e| Error::Embedding {
                gadget: name.clone(),
                reason: e.to_string(),
            })?;
            let mut ids_here = Vec::new();
            for q in pts {
                let id = atoms.len();
                atoms.push(Atom {
                    id,
                    weight: gadget.ancilla_weight,
                    role: Role::Ancilla {
                        gadget: gid,
                        index: chain.len(),
                    },
                });
                pos.push(q);
                chain.push(id);
                ids_here.push(id);
            }
            polylines.push((gid, leg.path.clone()));
            per_leg.push(ids_here);
        }
        for &i in &p.ends[0] {
            edges.push((i, chain[0]));
        }
        for &i in &p.ends[1] {
            edges.push((i, chain[length - 1]));
        }
        for (k, leg) in per_leg.iter().enumerate() {
            for w in leg.windows(2) {
                edges.push((w[0], w[1]));
            }
            let bridged = p.via.is_some() && k == 0;
            if k + 1 < per_leg.len() && !bridged {
                edges.push((*leg.last().unwrap(), per_leg[k + 1][0]));
            }
        }
        let covers = p.ends[0]
            .iter()
            .flat_map(|&i| p.ends[1].iter().map(move |&j| (i, j)))
            .map(|(i, j)| (ids[i], ids[j]))
            .collect();
        gadgets.push(PlacedGadget {
            name,
            gadget,
            endpoints: p.ends.iter().flatten().copied().collect(),
            ancillas: chain,
            covers,
        });
        leg_atoms.push(per_leg);
    }

    // Auto-routed chains must not cross each other.
    for a in 0..polylines.len() {
        for b in a + 1..polylines.len() {
            let (ga, pa) = &polylines[a];
            let (gb, pb) = &polylines[b];
            if ga == gb {
                continue;
            }
            for s in pa.windows(2) {
                for t in pb.windows(2) {
                    if segments_cross(s[0], s[1], t[0], t[1]) {
                        return Err(Error::Embedding {
                            gadget: gadgets[*ga].name.clone(),
                            reason: format!(
                                "route crosses {}; declare a crossing gadget for this pair",
                                gadgets[*gb].name
                            ),
                        });
                    }
                }
            }
        }
    }

    // Crossing cores.
    for (k, &(center, core)) in crossings.iter().enumerate() {
        let name = format!("crossing#{k}");
        let through: Vec<usize> = pending
            .iter()
            .enumerate()
            .filter(|(_, p)| p.via == Some(k))
            .map(|(g, _)| g)
            .collect();
        if through.len() != 2 {
            return Err(Error::Embedding {
                gadget: name,
                reason: format!("{} wires pass through it; exactly two are needed", through.len()),
            });
        }
        let arm = |g: usize, side: usize| -> Option<usize> {
            let legs = &leg_atoms[g];
            if side == 0 {
                legs[0].last().copied()
            } else {
                legs[1].first().copied()
            }
        };
        let mut arms = Vec::new();
        for &g in &through {
            for side in 0..2 {
                arms.push(arm(g, side).ok_or_else(|| Error::Embedding {
                    gadget: name.clone(),
                    reason: format!("{} has an empty leg at the crossing", gadgets[g].name),
                })?);
            }
        }
        // arms = [α, β, γ, δ]; lines α–β and γ–δ.
        let angle = |a: usize| {
            let p = pos[a];
            (p[1] - center[1]).atan2(p[0] - center[0])
        };
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&x, &y| angle(arms[x]).total_cmp(&angle(arms[y])));
        let line = |x: usize| x / 2;
        if (0..4).any(|q| line(order[q]) == line(order[(q + 1) % 4])) {
            return Err(Error::Embedding {
                gadget: name,
                reason: "the two lines' arms do not alternate around the core".into(),
            });
        }
        let aw: Vec<f64> = arms.iter().map(|&a| atoms[a].weight).collect();
        let gadget = build_crossing_gadget(aw[0], aw[1], aw[2], aw[3], opts.margin)?;
        let gid = gadgets.len();
        let mut anc = Vec::new();
        // Start the core walk at α so ancilla k touches CROSSING_ANCILLA_ENDS[k].
        let start = order.iter().position(|&x| x == 0).unwrap();
        let walk: Vec<usize> = (0..4).map(|q| order[(start + q) % 4]).collect();
        let reversed = walk[1] != 2;
        let walk: Vec<usize> = if reversed {
            vec![walk[0], walk[3], walk[2], walk[1]]
        } else {
            walk
        };
        for q in 0..4 {
            let (u, v) = (arms[walk[q]], arms[walk[(q + 1) % 4]]);
            let du = unit([pos[u][0] - center[0], pos[u][1] - center[1]]);
            let dv = unit([pos[v][0] - center[0], pos[v][1] - center[1]]);
            let b = [du[0] + dv[0], du[1] + dv[1]];
            let norm = b[0].hypot(b[1]);
            if norm < 1e-9 {
                return Err(Error::Embedding {
                    gadget: name,
                    reason: "two neighbouring arms are collinear through the centre".into(),
                });
            }
            let id = atoms.len();
            atoms.push(Atom {
                id,
                weight: gadget.ancilla_weight,
                role: Role::Ancilla { gadget: gid, index: q },
            });
            pos.push([center[0] + core * b[0] / norm, center[1] + core * b[1] / norm]);
            edges.push((id, u));
            edges.push((id, v));
            anc.push(id);
        }
        for x in 0..4 {
            for y in x + 1..4 {
                edges.push((anc[x], anc[y]));
            }
        }
        let covers = vec![(arms[0], arms[1]), (arms[2], arms[3])];
        gadgets.push(PlacedGadget {
            name,
            gadget,
            endpoints: arms,
            ancillas: anc,
            covers,
        });
    }

    let layout = GeometricLayout::new(pos, radius)?;
    let inst = EmbeddedInstance::from_parts(problem.clone(), atoms, layout, gadgets, edges)?;
    let report = inst.validate(&RydbergParams::default(), InteractionModel::Ideal)?;
    if let Some(p) = report.missing_edges.first().or(report.unintended_edges.first()) {
        let kind = if report.missing_edges.is_empty() {
            "unintended blockade"
        } else {
            "missing blockade"
        };
        return Err(Error::Embedding {
            gadget: inst.owner_name(p.a),
            reason: format!(
                "{kind} between atom {} [{}] and atom {} [{}] at {:.3} µm (R = {radius})",
                p.a,
                inst.owner_name(p.a),
                p.b,
                inst.owner_name(p.b),
                p.distance
            ),
        });
    }
    Ok(inst)
}

fn unit(v: Point) -> Point {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Penalty-relaxation layout of the logical vertices.
fn auto_layout(
    problem: &LogicalProblem,
    required: &BTreeSet<(usize, usize)>,
    covered: &BTreeMap<(usize, usize), String>,
    must_be_direct: &BTreeSet<(usize, usize)>,
    forced_long: &mut BTreeSet<(usize, usize)>,
    radius: f64,
) -> Result<Vec<Point>> {
    let n = problem.len();
    let qubo = problem.mode() == Mode::Qubo;
    let init = circle(n, radius * (0.5 + n as f64 * 0.35));
    loop {
        let mut targets = Vec::new();
        let mut direct_pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let e = (i, j);
                let t = if !required.contains(&e) {
                    PairTarget::AtLeast(1.3 * radius)
                } else if qubo {
                    PairTarget::Between(2.2 * radius, 3.2 * radius)
                } else if covered.contains_key(&e) || forced_long.contains(&e) {
                    PairTarget::AtLeast(2.2 * radius)
                } else {
                    direct_pairs.push(e);
                    PairTarget::AtMost(0.75 * radius)
                };
                targets.push((i, j, t));
            }
        }
        let (pos, penalty) = relax_layout(init.clone(), &targets, 20_000, 0.05);
        let ok = penalty < 1e-10 * radius * radius;
        if ok {
            return Ok(pos);
        }
        // Reclassify the most stretched direct edge as long-range.
        let worst = direct_pairs
            .iter()
            .filter(|e| !must_be_direct.contains(e))
            .max_by(|a, b| dist(pos[a.0], pos[a.1]).total_cmp(&dist(pos[b.0], pos[b.1])))
            .copied();
        match worst {
            Some(e) if dist(pos[e.0], pos[e.1]) > 0.75 * radius => {
                forced_long.insert(e);
            }
            _ => {
                return Err(Error::Embedding {
                    gadget: "logical layout".into(),
                    reason: format!("could not place the logical vertices (residual penalty {penalty:.3e})"),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_embedded;

    fn ideal(inst: &EmbeddedInstance) -> SolutionSet {
        solve_embedded(inst, InteractionModel::Ideal, &RydbergParams::default()).unwrap()
    }

    fn check_equivalence(inst: &EmbeddedInstance) {
        let emb = ideal(inst);
        let logical = inst.problem().solve().unwrap();
        let projected: BTreeSet<Configuration> = emb
            .configurations
            .iter()
            .map(|c| extract_logical(inst, c).unwrap())
            .collect();
        let expected: BTreeSet<Configuration> = logical.configurations.iter().cloned().collect();
        assert_eq!(projected, expected);
        assert!((emb.optimal_energy - (logical.optimal_energy + inst.energy_offset())).abs() < 1e-9);
    }

    #[test]
    fn udg_problem_embeds_without_gadgets() {
        let g = MwisGraph::new(vec![0.5, 0.6, 0.7], vec![(0, 1), (1, 2)]).unwrap();
        let mut hints = RoutingSpec::default();
        hints.positions.insert(0, [0.0, 0.0]);
        hints.positions.insert(1, [5.0, 0.0]);
        hints.positions.insert(2, [10.0, 0.0]);
        let inst = embed(&LogicalProblem::Mwis(g), &hints, &EmbedOptions::default()).unwrap();
        assert_eq!(inst.len(), 3);
        assert!(inst.gadgets().is_empty());
        assert_eq!(inst.energy_offset(), 0.0);
        assert_eq!(inst.logical_map(), &[0, 1, 2]);
        check_equivalence(&inst);
    }

    #[test]
    fn auto_layout_path_needs_no_wires() {
        let g = MwisGraph::new(vec![0.5, 0.6, 0.7, 0.4], vec![(0, 1), (1, 2), (2, 3)]).unwrap();
        let inst = embed(
            &LogicalProblem::Mwis(g),
            &RoutingSpec::default(),
            &EmbedOptions::default(),
        )
        .unwrap();
        assert!(inst.gadgets().is_empty());
        check_equivalence(&inst);
    }

    #[test]
    fn long_edge_becomes_even_wire() {
        let g = MwisGraph::new(vec![0.7, 0.3], vec![(0, 1)]).unwrap();
        let mut hints = RoutingSpec::default();
        hints.positions.insert(0, [0.0, 0.0]);
        hints.positions.insert(1, [30.0, 0.0]);
        let inst = embed(&LogicalProblem::Mwis(g), &hints, &EmbedOptions::default()).unwrap();
        assert_eq!(inst.gadgets().len(), 1);
        let gd = &inst.gadgets()[0].gadget;
        assert_eq!(gd.length % 2, 0);
        assert!((inst.energy_offset() - gd.offset()).abs() < 1e-15);
        check_equivalence(&inst);
    }

    #[test]
    fn forced_long_range_override() {
        let g = MwisGraph::new(vec![0.7, 0.3], vec![(0, 1)]).unwrap();
        let mut hints = RoutingSpec::default();
        hints.long_range.push([0, 1]);
        let inst = embed(&LogicalProblem::Mwis(g), &hints, &EmbedOptions::default()).unwrap();
        assert_eq!(inst.gadgets().len(), 1);
        check_equivalence(&inst);
    }

    #[test]
    fn qubo_pair_auto_routes() {
        let q = QuboProblem::new(vec![-0.6, -0.5], vec![((0, 1), 0.3)]).unwrap();
        let inst = embed(
            &LogicalProblem::Qubo(q),
            &RoutingSpec::default(),
            &EmbedOptions::default(),
        )
        .unwrap();
        assert_eq!(inst.gadgets().len(), 1);
        assert_eq!(inst.gadgets()[0].gadget.ancilla_weight, 0.3);
        check_equivalence(&inst);
    }

    #[test]
    fn qubo_triangle_hint_is_unsupported() {
        let q = QuboProblem::new(
            vec![-0.6, -0.5, -0.4],
            vec![((0, 1), 0.3), ((0, 2), 0.3), ((1, 2), 0.3)],
        )
        .unwrap();
        let hints = RoutingSpec {
            gadgets: vec![GadgetRoute {
                kind: Some(GadgetKind::Triangle),
                ends: vec![vec![0, 1], vec![2]],
                ..Default::default()
            }],
            ..Default::default()
        };
        assert!(matches!(
            embed(&LogicalProblem::Qubo(q), &hints, &EmbedOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn bad_hints_are_input_errors() {
        let g = MwisGraph::new(vec![0.7, 0.3], vec![(0, 1)]).unwrap();
        let mut hints = RoutingSpec::default();
        hints.positions.insert(0, [0.0, 0.0]);
        assert!(matches!(
            embed(&LogicalProblem::Mwis(g.clone()), &hints, &EmbedOptions::default()),
            Err(Error::Input(_))
        ));
        let hints = RoutingSpec {
            gadgets: vec![GadgetRoute {
                kind: Some(GadgetKind::Wire),
                ends: vec![vec![0], vec![7]],
                ..Default::default()
            }],
            ..Default::default()
        };
        assert!(embed(&LogicalProblem::Mwis(g), &hints, &EmbedOptions::default()).is_err());
    }

    #[test]
    fn routing_failure_names_gadget() {
        // A third vertex sits right on the wire's path.
        let g = MwisGraph::new(vec![0.7, 0.3, 0.2], vec![(0, 1)]).unwrap();
        let mut hints = RoutingSpec::default();
        hints.positions.insert(0, [0.0, 0.0]);
        hints.positions.insert(1, [30.0, 0.0]);
        hints.positions.insert(2, [15.0, 0.5]);
        match embed(&LogicalProblem::Mwis(g), &hints, &EmbedOptions::default()) {
            Err(Error::Embedding { gadget, reason }) => {
                assert!(gadget.contains("wire") || reason.contains("wire"), "{gadget}: {reason}");
            }
            other => panic!("expected embedding error, got {other:?}"),
        }
    }

    #[test]
    fn crossing_wires_without_gadget_rejected() {
        let q = QuboProblem::new(vec![-0.5, -0.5, -0.5, -0.5], vec![((0, 2), 0.2), ((1, 3), 0.2)]).unwrap();
        let mut hints = RoutingSpec::default();
        hints.positions.insert(0, [-20.0, 0.0]);
        hints.positions.insert(2, [20.0, 0.0]);
        hints.positions.insert(1, [0.0, 20.0]);
        hints.positions.insert(3, [0.0, -20.0]);
        let err = embed(&LogicalProblem::Qubo(q), &hints, &EmbedOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Embedding { .. }), "{err}");
    }

    #[test]
    fn declared_crossing_preserves_optima() {
        let r = 8.0;
        let s = 0.8 * r;
        let q = QuboProblem::new(vec![-0.5, -0.4, -0.45, -0.3], vec![((0, 2), 0.2), ((1, 3), 0.25)]).unwrap();
        let core = 0.42 * r;
        let arm = core + 0.6 * r;
        let far = arm + s;
        let mut hints = RoutingSpec {
            radius: Some(r),
            ..Default::default()
        };
        hints.positions.insert(0, [-far, 0.0]);
        hints.positions.insert(2, [far, 0.0]);
        hints.positions.insert(1, [0.0, far]);
        hints.positions.insert(3, [0.0, -far]);
        let leg = |p: Point| Leg {
            path: vec![p],
            atoms: 1,
        };
        hints.gadgets = vec![
            GadgetRoute {
                kind: Some(GadgetKind::Wire),
                ends: vec![vec![0], vec![2]],
                legs: vec![leg([-arm, 0.0]), leg([arm, 0.0])],
                via: Some(0),
                ..Default::default()
            },
            GadgetRoute {
                kind: Some(GadgetKind::Wire),
                ends: vec![vec![1], vec![3]],
                legs: vec![leg([0.0, arm]), leg([0.0, -arm])],
                via: Some(0),
                ..Default::default()
            },
            GadgetRoute {
                kind: Some(GadgetKind::Crossing),
                center: Some([0.0, 0.0]),
                core_radius: Some(core),
                ..Default::default()
            },
        ];
        let inst = embed(&LogicalProblem::Qubo(q), &hints, &EmbedOptions::default()).unwrap();
        assert_eq!(inst.len(), 4 + 2 + 2 + 4);
        let cx = &inst.gadgets()[2].gadget;
        assert_eq!(cx.kind, GadgetKind::Crossing);
        assert!((cx.ancilla_weight - (0.4 + 0.5) * 1.1).abs() < 1e-12);
        check_equivalence(&inst);
    }

    #[test]
    fn extract_logical_checks_length() {
        let g = MwisGraph::new(vec![0.7, 0.3], vec![(0, 1)]).unwrap();
        let inst = embed(
            &LogicalProblem::Mwis(g),
            &RoutingSpec::default(),
            &EmbedOptions::default(),
        )
        .unwrap();
        assert!(extract_logical(&inst, &Configuration::zeros(1)).is_err());
        let z = extract_logical(&inst, &Configuration::zeros(inst.len())).unwrap();
        assert_eq!(z, Configuration::zeros(2));
    }
}
