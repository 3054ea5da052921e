//! File formats: problems, layouts, embeddings, solutions and sample CSVs.

use crate::embed::{Atom, EmbeddedInstance, LogicalProblem, PlacedGadget, Point, RoutingSpec};
use crate::error::{Error, Result};
use crate::graph::{Configuration, GeometricLayout, MwisGraph, QuboProblem};
use crate::manifest::RunManifest;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Parses JSON, reporting `locus:line:column` on failure.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, locus: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(format!("{locus}:{}:{}", e.line(), e.column()), e))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("serialisation failed: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexEntry {
    pub id: usize,
    pub weight: f64,
}

/// On-disk problem description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemFile {
    Mwis {
        vertices: Vec<VertexEntry>,
        /// Pairs of vertex ids.
        #[serde(default)]
        edges: Vec<[usize; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        penalty: Option<f64>,
        /// `[i, j, U]` per-edge overrides.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        edge_penalties: Vec<(usize, usize, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layout_hints: Option<RoutingSpec>,
    },
    Qubo {
        /// Variable id → `h_i`.
        linear: BTreeMap<String, f64>,
        /// `"i,j"` → `J_ij`.
        #[serde(default)]
        quadratic: BTreeMap<String, f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        layout_hints: Option<RoutingSpec>,
    },
}

fn parse_id(s: &str, locus: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(locus, format!("{s:?} is not a non-negative integer id")))
}

impl ProblemFile {
    /// Converts to the in-memory problem plus any layout hints.
    pub fn into_problem(self, locus: &str) -> Result<(LogicalProblem, RoutingSpec)> {
        match self {
            ProblemFile::Mwis {
                vertices,
                edges,
                penalty,
                edge_penalties,
                layout_hints,
            } => {
                let ids: Vec<usize> = vertices.iter().map(|v| v.id).collect();
                let weights = vertices.iter().map(|v| v.weight).collect();
                let index = |id: usize| {
                    ids.iter()
                        .position(|&x| x == id)
                        .ok_or_else(|| Error::parse(format!("{locus}: edges"), format!("unknown vertex id {id}")))
                };
                let dense = edges
                    .iter()
                    .map(|e| Ok((index(e[0])?, index(e[1])?)))
                    .collect::<Result<Vec<_>>>()?;
                let mut g = MwisGraph::with_ids(ids.clone(), weights, dense)?;
                if let Some(u) = penalty {
                    g = g.with_penalty(u)?;
                }
                for (i, j, u) in edge_penalties {
                    g = g.with_edge_penalty(index(i)?, index(j)?, u)?;
                }
                Ok((LogicalProblem::Mwis(g), layout_hints.unwrap_or_default()))
            }
            ProblemFile::Qubo {
                linear,
                quadratic,
                layout_hints,
            } => {
                let mut entries = linear
                    .iter()
                    .map(|(k, &h)| Ok((parse_id(k, &format!("{locus}: linear"))?, h)))
                    .collect::<Result<Vec<_>>>()?;
                entries.sort_by_key(|e| e.0);
                let ids: Vec<usize> = entries.iter().map(|e| e.0).collect();
                let h = entries.iter().map(|e| e.1).collect();
                let mut couplings = Vec::new();
                for (k, &v) in &quadratic {
                    let here = format!("{locus}: quadratic[{k:?}]");
                    let (a, b) = k
                        .split_once(',')
                        .ok_or_else(|| Error::parse(&here, "keys must look like \"i,j\""))?;
                    let (a, b) = (parse_id(a, &here)?, parse_id(b, &here)?);
                    let pos = |id| {
                        ids.iter()
                            .position(|&x| x == id)
                            .ok_or_else(|| Error::parse(&here, format!("variable {id} has no linear term")))
                    };
                    couplings.push(((pos(a)?, pos(b)?), v));
                }
                let q = QuboProblem::with_ids(ids, h, couplings)?;
                Ok((LogicalProblem::Qubo(q), layout_hints.unwrap_or_default()))
            }
        }
    }

    pub fn from_problem(problem: &LogicalProblem, hints: Option<RoutingSpec>) -> Self {
        match problem {
            LogicalProblem::Mwis(g) => {
                let ids = g.ids();
                let default_u = 1.0 + g.weights().iter().sum::<f64>();
                ProblemFile::Mwis {
                    vertices: ids
                        .iter()
                        .zip(g.weights())
                        .map(|(&id, &weight)| VertexEntry { id, weight })
                        .collect(),
                    edges: g.edges().iter().map(|&(i, j)| [ids[i], ids[j]]).collect(),
                    penalty: (g.penalty() != default_u).then_some(g.penalty()),
                    edge_penalties: g
                        .edge_penalties()
                        .iter()
                        .map(|(&(i, j), &u)| (ids[i], ids[j], u))
                        .collect(),
                    layout_hints: hints,
                }
            }
            LogicalProblem::Qubo(q) => {
                let ids = q.ids();
                ProblemFile::Qubo {
                    linear: ids.iter().zip(q.linear()).map(|(id, &h)| (id.to_string(), h)).collect(),
                    quadratic: q
                        .couplings()
                        .iter()
                        .map(|(&(i, j), &v)| (format!("{},{}", ids[i], ids[j]), v))
                        .collect(),
                    layout_hints: hints,
                }
            }
        }
    }
}

pub fn parse_problem(text: &str, locus: &str) -> Result<(LogicalProblem, RoutingSpec)> {
    parse_json::<ProblemFile>(text, locus)?.into_problem(locus)
}

pub fn read_problem(path: &Path) -> Result<(LogicalProblem, RoutingSpec)> {
    parse_problem(&read_text(path)?, &path.display().to_string())
}

/// Maps keyed by integer ids, written with string keys as JSON requires.
/// Parsing goes through strings so the maps also work inside tagged enums.
pub mod id_map {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<V: Serialize, S: Serializer>(m: &BTreeMap<usize, V>, s: S) -> Result<S::Ok, S::Error> {
        m.serialize(s)
    }

    pub fn deserialize<'de, V: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<usize, V>, D::Error> {
        BTreeMap::<String, V>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| {
                k.trim()
                    .parse()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("{k:?} is not a non-negative integer id")))
            })
            .collect()
    }
}

/// `{"positions": {"id": [x, y]}, "radius": R}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    #[serde(with = "id_map")]
    pub positions: BTreeMap<usize, Point>,
    pub radius: f64,
}

impl LayoutFile {
    /// Layout over ids `0..n` in order.
    pub fn into_layout(self) -> Result<GeometricLayout> {
        let n = self.positions.len();
        let mut pos = Vec::with_capacity(n);
        for k in 0..n {
            pos.push(
                *self
                    .positions
                    .get(&k)
                    .ok_or_else(|| Error::input(format!("layout ids must be 0..{n}; {k} is missing")))?,
            );
        }
        GeometricLayout::new(pos, self.radius)
    }

    pub fn from_layout(layout: &GeometricLayout) -> Self {
        LayoutFile {
            positions: layout.positions().iter().copied().enumerate().collect(),
            radius: layout.radius(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomEntry {
    #[serde(flatten)]
    pub atom: Atom,
    pub position: Point,
}

/// On-disk embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub problem: ProblemFile,
    pub radius: f64,
    pub atoms: Vec<AtomEntry>,
    pub gadgets: Vec<PlacedGadget>,
    /// Logical vertex id → atom id.
    pub logical_map: BTreeMap<usize, usize>,
    pub energy_offset: f64,
    pub intended_edges: Vec<(usize, usize)>,
    /// Derived: pairs closer than `radius`.
    pub udg_edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

impl EmbeddingFile {
    pub fn from_instance(inst: &EmbeddedInstance, manifest: Option<RunManifest>) -> Self {
        let ids = inst.problem().ids();
        EmbeddingFile {
            problem: ProblemFile::from_problem(inst.problem(), None),
            radius: inst.layout().radius(),
            atoms: inst
                .atoms()
                .iter()
                .zip(inst.layout().positions())
                .map(|(a, &p)| AtomEntry {
                    atom: a.clone(),
                    position: p,
                })
                .collect(),
            gadgets: inst.gadgets().to_vec(),
            logical_map: ids.iter().copied().zip(inst.logical_map().iter().copied()).collect(),
            energy_offset: inst.energy_offset(),
            intended_edges: inst.intended_edges().to_vec(),
            udg_edges: inst.layout().udg_edges(),
            manifest,
        }
    }

    pub fn into_instance(self, locus: &str) -> Result<EmbeddedInstance> {
        let (problem, _) = self.problem.into_problem(locus)?;
        let positions = self.atoms.iter().map(|a| a.position).collect();
        let atoms: Vec<Atom> = self.atoms.into_iter().map(|a| a.atom).collect();
        let layout = GeometricLayout::new(positions, self.radius)?;
        let inst = EmbeddedInstance::from_parts(problem, atoms, layout, self.gadgets, self.intended_edges)?;
        let ids = inst.problem().ids();
        for (k, &atom) in inst.logical_map().iter().enumerate() {
            if self.logical_map.get(&ids[k]) != Some(&atom) {
                return Err(Error::parse(
                    format!("{locus}: logical_map"),
                    format!("vertex {} disagrees with the atom roles", ids[k]),
                ));
            }
        }
        if (inst.energy_offset() - self.energy_offset).abs() > 1e-9 * (1.0 + self.energy_offset.abs()) {
            return Err(Error::parse(
                format!("{locus}: energy_offset"),
                format!(
                    "stored {} but the gadgets imply {}",
                    self.energy_offset,
                    inst.energy_offset()
                ),
            ));
        }
        Ok(inst)
    }
}

pub fn read_embedding(path: &Path) -> Result<EmbeddedInstance> {
    let locus = path.display().to_string();
    parse_json::<EmbeddingFile>(&read_text(path)?, &locus)?.into_instance(&locus)
}

/// Problem or embedding, distinguished by content.
pub enum Instance {
    Problem(LogicalProblem, RoutingSpec),
    Embedding(Box<EmbeddedInstance>),
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = read_text(path)?;
    let locus = path.display().to_string();
    let value: serde_json::Value = parse_json(&text, &locus)?;
    if value.get("atoms").is_some() {
        let f: EmbeddingFile = parse_json(&text, &locus)?;
        Ok(Instance::Embedding(Box::new(f.into_instance(&locus)?)))
    } else {
        let (p, h) = parse_problem(&text, &locus)?;
        Ok(Instance::Problem(p, h))
    }
}

/// A batch of bitstrings with multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub source: String,
    pub samples: Vec<(Configuration, u64)>,
}

impl SampleBatch {
    pub fn new(source: impl Into<String>, samples: Vec<(Configuration, u64)>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let n = first.0.len();
            if let Some((c, _)) = samples.iter().find(|(c, _)| c.len() != n) {
                return Err(Error::input(format!("sample {c} has {} bits, expected {n}", c.len())));
            }
        }
        Ok(SampleBatch {
            source: source.into(),
            samples,
        })
    }

    pub fn total(&self) -> u64 {
        self.samples.iter().map(|s| s.1).sum()
    }

    /// One entry per shot.
    pub fn expanded(&self) -> Vec<Configuration> {
        self.samples
            .iter()
            .flat_map(|(c, k)| std::iter::repeat_n(c.clone(), *k as usize))
            .collect()
    }
}

/// Reads a sample CSV: one bitstring per row, optional second column with a
/// count, optional `bitstring,count` header, `#` comment lines. With
/// `lost_atom_marker`, the character `L` counts as an excited atom (atoms are
/// detected through loss).
pub fn parse_samples(text: &str, locus: &str, lost_atom_marker: bool) -> Result<SampleBatch> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut samples = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let here = format!("{locus}:row {}", row + 1);
        let rec = rec.map_err(|e| Error::parse(&here, e))?;
        let Some(bits) = rec.get(0).filter(|s| !s.is_empty()) else {
            continue;
        };
        if row == 0 && bits.eq_ignore_ascii_case("bitstring") {
            continue;
        }
        let bits: Vec<bool> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                'L' | 'l' if lost_atom_marker => Ok(true),
                other => Err(Error::parse(&here, format!("invalid bit {other:?}"))),
            })
            .collect::<Result<_>>()?;
        let count = match rec.get(1).filter(|s| !s.is_empty()) {
            None => 1,
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| Error::parse(&here, format!("count {s:?} is not a non-negative integer")))?,
        };
        samples.push((Configuration::new(bits), count));
    }
    SampleBatch::new(locus, samples).map_err(|e| Error::parse(locus, e))
}

pub fn read_samples(path: &Path, lost_atom_marker: bool) -> Result<SampleBatch> {
    parse_samples(&read_text(path)?, &path.display().to_string(), lost_atom_marker)
}

/// CSV with a `# manifest=` comment line when a manifest is given.
pub fn samples_csv(batch: &SampleBatch, manifest: Option<&RunManifest>) -> Result<String> {
    let mut out = String::new();
    if let Some(m) = manifest {
        out.push_str(&manifest_comment(m)?);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bitstring", "count"]).map_err(csv_err)?;
    for (c, k) in &batch.samples {
        w.write_record([c.to_string(), k.to_string()]).map_err(csv_err)?;
    }
    out.push_str(
        &String::from_utf8(w.into_inner().map_err(|e| csv_err(e.into_error()))?).expect("csv output is UTF-8"),
    );
    Ok(out)
}

/// `# manifest={...}` line for CSV artifacts.
pub fn manifest_comment(m: &RunManifest) -> Result<String> {
    let json = serde_json::to_string(m).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(format!("# manifest={json}\n"))
}

/// Writes rows with a header to CSV text, prefixed by the manifest comment.
pub fn table_csv(header: &[&str], rows: &[Vec<String>], manifest: Option<&RunManifest>) -> Result<String> {
    let mut out = String::new();
    if let Some(m) = manifest {
        out.push_str(&manifest_comment(m)?);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    out.push_str(
        &String::from_utf8(w.into_inner().map_err(|e| csv_err(e.into_error()))?).expect("csv output is UTF-8"),
    );
    Ok(out)
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Numerical(format!("CSV serialisation failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mwis_problem_round_trip() {
        let text = r#"{"type":"mwis","vertices":[{"id":3,"weight":0.5},{"id":7,"weight":0.25}],
                       "edges":[[3,7]],"edge_penalties":[[3,7,2.0]]}"#;
        let (p, hints) = parse_problem(text, "t").unwrap();
        assert_eq!(hints, RoutingSpec::default());
        let LogicalProblem::Mwis(g) = &p else { panic!() };
        assert_eq!(g.ids(), &[3, 7]);
        assert_eq!(g.edge_penalty(0, 1), 2.0);
        let back = ProblemFile::from_problem(&p, None);
        let (p2, _) = back.into_problem("t").unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn qubo_problem_round_trip() {
        let text = r#"{"type":"qubo","linear":{"0":-0.4,"1":-0.3},"quadratic":{"0,1":0.2}}"#;
        let (p, _) = parse_problem(text, "t").unwrap();
        let LogicalProblem::Qubo(q) = &p else { panic!() };
        assert_eq!(q.coupling(1, 0), 0.2);
        let (p2, _) = ProblemFile::from_problem(&p, None).into_problem("t").unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn malformed_json_reports_locus() {
        let err = parse_problem("{\"type\": \"mwis\",\n \"vertices\": [", "bad.json").unwrap_err();
        match err {
            Error::Parse { locus, .. } => assert!(locus.starts_with("bad.json:2:"), "{locus}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_problem(r#"{"type":"qubo","linear":{"0":-1},"quadratic":{"01":1}}"#, "x"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn positive_h_is_unsupported() {
        let text = r#"{"type":"qubo","linear":{"0":0.4}}"#;
        assert!(matches!(parse_problem(text, "t"), Err(Error::Unsupported(_))));
    }

    #[test]
    fn samples_with_counts_comments_and_loss() {
        let text = "# manifest={}\nbitstring,count\n0101,3\n1L00\n";
        assert!(parse_samples(text, "s", false).is_err());
        let b = parse_samples(text, "s", true).unwrap();
        assert_eq!(b.samples.len(), 2);
        assert_eq!(b.total(), 4);
        assert_eq!(b.samples[1].0.to_string(), "1100");
        let csv = samples_csv(&b, None).unwrap();
        assert_eq!(
            parse_samples(&csv, "s", false).unwrap(),
            SampleBatch {
                source: "s".into(),
                ..b
            }
        );
    }

    #[test]
    fn ragged_samples_rejected() {
        assert!(parse_samples("01\n011\n", "s", false).is_err());
    }

    #[test]
    fn layout_file_round_trip() {
        let l = GeometricLayout::new(vec![[0.0, 0.0], [1.0, 2.0]], 3.0).unwrap();
        let f = LayoutFile::from_layout(&l);
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"1\":[1.0,2.0]"));
        let back: LayoutFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_layout().unwrap(), l);
    }
}
