//! The `rydwire` command line.
//!
//! Structured results go to stdout (or `--out`) as JSON, bulk data as CSV.
//! Every written artifact carries the run manifest: inline (`"manifest"`
//! field or a `# manifest=` CSV comment) and as a `<out>.manifest.json`
//! sidecar. Failures print one JSON object on stderr and exit with 3
//! (validation), 4 (size cap) or 1 (anything else); usage errors exit 2.

use crate::embed::gadget::DEFAULT_MARGIN;
use crate::embed::{
    build_crossing_gadget, build_wire, embed, extract_logical, Coupling, EmbedOptions, EmbeddedInstance, WireGadget,
    DEFAULT_RADIUS, DEFAULT_SPACING_RATIO,
};
use crate::error::{Error, Result};
use crate::fixtures::{all_fixtures, fixture};
use crate::graph::{InteractionModel, MwisGraph, RydbergParams};
use crate::io::{
    parse_json, read_embedding, read_instance, read_samples, read_text, samples_csv, table_csv, to_json_pretty,
    write_text, EmbeddingFile, Instance, ProblemFile, SampleBatch,
};
use crate::manifest::{sidecar_path, ManifestBuilder, RunManifest};
use crate::postproc::{
    rank_configurations, sampler_baseline, Pipeline, DEFAULT_BASELINE_REPEATS, DEFAULT_BASELINE_STRINGS,
};
use crate::quantum::{evolve, sample_configurations, spectral_gap_curve, AnnealingSchedule, BasisKind};
use crate::rng::DEFAULT_SEED;
use crate::robustness::{
    crossing_success_probability, empirical_vs_analytic, matched_gap_wire, sigma_grid, success_curve,
    wire_success_probability, PerturbationSpec, SIGMA_GRID_POINTS,
};
use crate::solver::{solve_embedded, SolutionSet};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Largest embedding for which ground states are computed implicitly
/// (ranking, annealing summaries).
const IMPLICIT_SOLVE_CAP: usize = 34;

#[derive(Parser, Debug)]
#[command(
    name = "rydwire",
    version,
    about = "Quantum-wire embeddings of MWIS/QUBO problems into Rydberg atom layouts"
)]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Embed a logical problem into a unit-disk atom layout.
    Embed(EmbedArgs),
    /// Exact optima of a problem or an embedding.
    Solve(SolveArgs),
    /// Low-lying spectrum along an annealing schedule.
    Gap(GapArgs),
    /// Simulate an anneal and sample bitstrings.
    Anneal(AnnealArgs),
    /// Weight-noise Monte Carlo for gadgets.
    #[command(subcommand)]
    Robustness(RobustnessCommand),
    /// Repair and rank measured bitstrings.
    Postprocess(PostprocessArgs),
    /// Random-sampler baseline on an embedding.
    Baseline(BaselineArgs),
    /// Bundled problem instances.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Args, Debug, Serialize)]
pub struct EmbedArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Relative margin of ancilla weights above the gadget bound.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    /// Chain spacing as a fraction of R.
    #[arg(long, default_value_t = DEFAULT_SPACING_RATIO)]
    pub spacing_ratio: f64,
    /// Unit-disk radius in µm when the problem carries none.
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct PhysicsArgs {
    /// C6 in GHz·µm⁶ (sign ignored).
    #[arg(long, default_value_t = -3376.0, allow_hyphen_values = true)]
    pub c6: f64,
    /// Rabi frequency Ω/2π in MHz.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Largest per-site detuning in MHz (default: the blockade cap).
    #[arg(long)]
    pub delta_max: Option<f64>,
}

impl PhysicsArgs {
    fn params(&self) -> Result<RydbergParams> {
        let p = RydbergParams {
            c6: self.c6,
            omega: self.omega,
            delta_max: self.delta_max,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Serialize)]
pub struct SolveArgs {
    /// Problem or embedding file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = InteractionModel::Ideal)]
    pub model: InteractionModel,
    /// Report every optimum instead of the first.
    #[arg(long)]
    pub all_optima: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub physics: PhysicsArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct ScheduleArgs {
    /// Schedule JSON; the default three-phase ramp is used without it.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Total time of the default schedule in µs.
    #[arg(long = "total-time", default_value_t = 4.0)]
    pub total_time: f64,
    #[arg(long, value_enum, default_value_t = BasisKind::Auto)]
    pub basis: BasisKind,
}

impl ScheduleArgs {
    fn resolve(
        &self,
        emb: &EmbeddedInstance,
        params: &RydbergParams,
        mb: &mut ManifestBuilder,
    ) -> Result<AnnealingSchedule> {
        match &self.schedule {
            Some(p) => {
                mb.input(p)?;
                let s: AnnealingSchedule = parse_json(&read_text(p)?, &p.display().to_string())?;
                s.validate()?;
                Ok(s)
            }
            None => {
                let w = emb.weights().into_iter().fold(0.0, f64::max);
                AnnealingSchedule::default_for(self.total_time, params, emb.layout().radius(), w)
            }
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct GapArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Number of evenly spaced sample times.
    #[arg(long, default_value_t = 64)]
    pub times: usize,
    /// Excited levels to track.
    #[arg(long, default_value_t = 1)]
    pub excited: usize,
    /// Output path; `.csv` writes the curve as CSV, anything else JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub physics: PhysicsArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct AnnealArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long, default_value_t = 1000)]
    pub shots: usize,
    #[arg(long, env = "RYDWIRE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Time step in µs (default: 0.01 over the largest energy scale).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Samples CSV; printed to stdout without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub physics: PhysicsArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct MonteCarloArgs {
    #[arg(long, default_value_t = 0.05)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, env = "RYDWIRE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct WireSpecArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Number of chain atoms (even).
    #[arg(long = "L", default_value_t = 2)]
    pub length: usize,
    /// Build the wire from a logical gap instead: `α, β = (1 ± ΔE)/2`.
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    pub matched_gap: Option<f64>,
}

impl WireSpecArgs {
    fn gadget(&self, margin: f64) -> Result<WireGadget> {
        if let Some(de) = self.matched_gap {
            return matched_gap_wire(de, self.length);
        }
        match (self.alpha, self.beta) {
            (Some(a), Some(b)) => build_wire(a, b, self.length, Coupling::Mwis { margin }),
            _ => Err(Error::input("give --alpha and --beta, or --matched-gap")),
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct CrossingSpecArgs {
    /// `α,β,γ,δ` for the lines α–β and γ–δ.
    #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.4, 0.1, 0.4, 0.1])]
    pub weights: Vec<f64>,
}

/// Shared by wire and crossing specs so that `sweep`, which accepts both,
/// has a single `--margin`.
#[derive(Args, Debug, Serialize)]
pub struct GadgetMarginArgs {
    /// Relative margin above the bound; 0 puts `c` exactly at the sum of
    /// the adjacent endpoint weights.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
}

impl CrossingSpecArgs {
    fn gadget(&self, margin: f64) -> Result<WireGadget> {
        let w = &self.weights;
        if w.len() != 4 {
            return Err(Error::input(format!("--weights needs 4 values, got {}", w.len())));
        }
        build_crossing_gadget(w[0], w[1], w[2], w[3], margin)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GadgetChoice {
    Wire,
    Crossing,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RobustnessCommand {
    /// Success probability of one wire.
    Wire {
        #[command(flatten)]
        wire: WireSpecArgs,
        #[command(flatten)]
        margin: GadgetMarginArgs,
        #[command(flatten)]
        mc: MonteCarloArgs,
    },
    /// Success probability of the crossing gadget.
    Crossing {
        #[command(flatten)]
        crossing: CrossingSpecArgs,
        #[command(flatten)]
        margin: GadgetMarginArgs,
        #[command(flatten)]
        mc: MonteCarloArgs,
    },
    /// Success curve over a σ grid (CSV).
    Sweep {
        #[arg(long, value_enum, default_value_t = GadgetChoice::Wire)]
        gadget: GadgetChoice,
        #[command(flatten)]
        wire: WireSpecArgs,
        #[command(flatten)]
        crossing: CrossingSpecArgs,
        #[arg(long, default_value_t = 0.1)]
        sigma_max: f64,
        #[arg(long, default_value_t = SIGMA_GRID_POINTS)]
        points: usize,
        #[command(flatten)]
        margin: GadgetMarginArgs,
        #[command(flatten)]
        mc: MonteCarloArgs,
    },
    /// Monte Carlo against analytic sector moments.
    Moments {
        #[command(flatten)]
        wire: WireSpecArgs,
        #[command(flatten)]
        margin: GadgetMarginArgs,
        #[command(flatten)]
        mc: MonteCarloArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Args, Debug, Serialize)]
pub struct PostprocessArgs {
    /// Embedding or MWIS problem file defining the graph.
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, value_enum, default_value_t = Pipeline::ReduceAdd)]
    pub pipeline: Pipeline,
    /// Treat `L` in bitstrings as an excited (lost) atom.
    #[arg(long)]
    pub lost_atom_marker: bool,
    #[arg(long, env = "RYDWIRE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    pub format: TableFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct BaselineArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    /// Random strings per repeat.
    #[arg(long, default_value_t = DEFAULT_BASELINE_STRINGS)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_BASELINE_REPEATS)]
    pub repeats: usize,
    #[arg(long, env = "RYDWIRE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Also score a measured batch (e.g. hardware shots) through reduce+add.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub lost_atom_marker: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FixturesCommand {
    /// Names and descriptions.
    List,
    /// Write problem files (layout hints included).
    Export {
        /// Fixture names; all of them when omitted.
        #[arg(long = "name")]
        names: Vec<String>,
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let report = json!({
                "error": {
                    "category": e.category(),
                    "message": e.to_string(),
                    "exit_code": e.exit_code(),
                }
            });
            eprintln!("{report}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::input("--threads must be at least 1"));
        }
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let name = command_name(&cli.command);
    let config = serde_json::to_value(&cli.command).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut mb = ManifestBuilder::new(name, config, rayon::current_num_threads());
    match cli.command {
        Command::Embed(a) => cmd_embed(a, &mut mb),
        Command::Solve(a) => cmd_solve(a, &mut mb),
        Command::Gap(a) => cmd_gap(a, &mut mb),
        Command::Anneal(a) => cmd_anneal(a, &mut mb),
        Command::Robustness(c) => cmd_robustness(c, &mut mb),
        Command::Postprocess(a) => cmd_postprocess(a, &mut mb),
        Command::Baseline(a) => cmd_baseline(a, &mut mb),
        Command::Fixtures(c) => cmd_fixtures(c),
    }
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Embed(_) => "embed".into(),
        Command::Solve(_) => "solve".into(),
        Command::Gap(_) => "gap".into(),
        Command::Anneal(_) => "anneal".into(),
        Command::Robustness(r) => format!(
            "robustness {}",
            match r {
                RobustnessCommand::Wire { .. } => "wire",
                RobustnessCommand::Crossing { .. } => "crossing",
                RobustnessCommand::Sweep { .. } => "sweep",
                RobustnessCommand::Moments { .. } => "moments",
            }
        ),
        Command::Postprocess(_) => "postprocess".into(),
        Command::Baseline(_) => "baseline".into(),
        Command::Fixtures(_) => "fixtures".into(),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Numerical(format!("serialisation failed: {e}")))
}

/// Attaches the manifest to a JSON result (wrapping non-objects).
fn with_manifest(result: Value, manifest: &RunManifest) -> Result<Value> {
    let mut obj = match result {
        Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    obj.insert("manifest".into(), to_value(manifest)?);
    Ok(Value::Object(obj))
}

/// Writes `text` to `out` with a manifest sidecar, or prints it.
/// Writes to stdout with a trailing newline. A closed pipe (`| head`) ends
/// the output quietly instead of aborting.
fn print_stdout(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let res = out
        .write_all(text.as_bytes())
        .and_then(|()| {
            if text.ends_with('\n') {
                Ok(())
            } else {
                out.write_all(b"\n")
            }
        })
        .and_then(|()| out.flush());
    match res {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn emit(out: Option<&Path>, text: &str, manifest: &RunManifest) -> Result<()> {
    match out {
        Some(p) => {
            write_text(p, text)?;
            write_text(&sidecar_path(p), &to_json_pretty(manifest)?)
        }
        None => print_stdout(text),
    }
}

fn emit_json(out: Option<&Path>, result: Value, mb: &ManifestBuilder) -> Result<()> {
    let m = mb.finish();
    emit(out, &to_json_pretty(&with_manifest(result, &m)?)?, &m)
}

fn cmd_embed(a: EmbedArgs, mb: &mut ManifestBuilder) -> Result<()> {
    mb.input(&a.input)?;
    let (problem, hints) = crate::io::read_problem(&a.input)?;
    let opts = EmbedOptions {
        margin: a.margin,
        spacing_ratio: a.spacing_ratio,
        radius: a.radius,
    };
    let inst = embed(&problem, &hints, &opts)?;
    let report = inst.validate(&RydbergParams::default(), InteractionModel::Ideal)?;
    if let Some(closest) = report.clearance_warnings.iter().map(|w| w.distance).reduce(f64::min) {
        eprintln!(
            "warning: {} non-adjacent atom pairs sit inside the clearance band (closest {closest:.3} µm, R = {} µm)",
            report.clearance_warnings.len(),
            inst.layout().radius()
        );
    }
    let m = mb.finish();
    let file = EmbeddingFile::from_instance(&inst, Some(m.clone()));
    let text = to_json_pretty(&file)?;
    match &a.out {
        Some(p) => {
            emit(Some(p), &text, &m)?;
            let summary = json!({
                "out": p.display().to_string(),
                "atoms": inst.len(),
                "logical_atoms": inst.problem().len(),
                "ancilla_atoms": inst.ancilla_count(),
                "gadgets": inst.gadgets().len(),
                "energy_offset": inst.energy_offset(),
                "ties": report.ties.len(),
                "clearance_warnings": report.clearance_warnings.len(),
            });
            print_stdout(&to_json_pretty(&summary)?)?;
            Ok(())
        }
        None => emit(None, &text, &m),
    }
}

fn truncate(mut s: SolutionSet, all: bool) -> SolutionSet {
    if !all {
        s.configurations.truncate(1);
    }
    s
}

fn cmd_solve(a: SolveArgs, mb: &mut ManifestBuilder) -> Result<()> {
    mb.input(&a.input)?;
    let result = match read_instance(&a.input)? {
        Instance::Problem(p, _) => {
            if a.model != InteractionModel::Ideal {
                return Err(Error::input("--model applies to embeddings only"));
            }
            let s = p.solve()?;
            json!({
                "kind": "logical",
                "ids": p.ids(),
                "degeneracy": s.degeneracy(),
                "solution": truncate(s, a.all_optima),
            })
        }
        Instance::Embedding(e) => {
            let params = a.physics.params()?;
            let s = solve_embedded(&e, a.model, &params)?;
            let mut logical: Vec<String> = s
                .configurations
                .iter()
                .map(|c| extract_logical(&e, c).map(|l| l.to_string()))
                .collect::<Result<_>>()?;
            logical.sort();
            logical.dedup();
            let logical_energy = match a.model {
                InteractionModel::Ideal => Some(s.optimal_energy - e.energy_offset()),
                InteractionModel::Vdw => None,
            };
            json!({
                "kind": "embedded",
                "model": a.model,
                "atoms": e.len(),
                "degeneracy": s.degeneracy(),
                "logical_projections": logical,
                "logical_energy": logical_energy,
                "solution": truncate(s, a.all_optima),
            })
        }
    };
    emit_json(a.out.as_deref(), result, mb)
}

fn cmd_gap(a: GapArgs, mb: &mut ManifestBuilder) -> Result<()> {
    mb.input(&a.embedding)?;
    let emb = read_embedding(&a.embedding)?;
    let params = a.physics.params()?;
    let schedule = a.schedule.resolve(&emb, &params, mb)?;
    let curve = spectral_gap_curve(&emb, &params, &schedule, a.times, a.excited, a.schedule.basis)?;
    let csv = a
        .out
        .as_ref()
        .is_some_and(|p| p.extension().is_some_and(|x| x == "csv"));
    if csv {
        let m = mb.finish();
        let k = curve.energies.first().map_or(0, Vec::len);
        let mut header = vec!["t_us".to_string(), "gap_mhz".to_string()];
        header.extend((0..k).map(|i| format!("e{i}_mhz")));
        let rows: Vec<Vec<String>> = curve
            .times
            .iter()
            .zip(&curve.gaps)
            .zip(&curve.energies)
            .map(|((t, g), es)| {
                let mut r = vec![t.to_string(), g.to_string()];
                r.extend(es.iter().map(|e| e.to_string()));
                r
            })
            .collect();
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        emit(a.out.as_deref(), &table_csv(&h, &rows, Some(&m))?, &m)
    } else {
        let mut v = to_value(&curve)?;
        v["schedule"] = to_value(&schedule)?;
        emit_json(a.out.as_deref(), v, mb)
    }
}

fn cmd_anneal(a: AnnealArgs, mb: &mut ManifestBuilder) -> Result<()> {
    mb.input(&a.embedding)?;
    mb.seed("sampling", a.seed);
    let emb = read_embedding(&a.embedding)?;
    let params = a.physics.params()?;
    let schedule = a.schedule.resolve(&emb, &params, mb)?;
    let (state, report) = evolve(&emb, &params, &schedule, a.dt, a.schedule.basis)?;
    let shots = sample_configurations(&state, a.shots, a.seed);
    let mut counts = BTreeMap::new();
    for c in shots {
        *counts.entry(c).or_insert(0u64) += 1;
    }
    let mut samples: Vec<_> = counts.into_iter().collect();
    samples.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    let batch = SampleBatch::new("simulated", samples)?;
    let ground_population = if emb.len() <= IMPLICIT_SOLVE_CAP {
        let g = solve_embedded(&emb, InteractionModel::Ideal, &params)?;
        Some(state.population(&g.configurations))
    } else {
        None
    };
    let m = mb.finish();
    let text = samples_csv(&batch, Some(&m))?;
    match &a.out {
        Some(p) => {
            emit(Some(p), &text, &m)?;
            let summary = json!({
                "out": p.display().to_string(),
                "shots": a.shots,
                "distinct": batch.samples.len(),
                "ground_state_population": ground_population,
                "evolution": report,
            });
            print_stdout(&to_json_pretty(&summary)?)?;
            Ok(())
        }
        None => emit(None, &text, &m),
    }
}

fn spec_of(mc: &MonteCarloArgs) -> PerturbationSpec {
    PerturbationSpec {
        relative_sigma: mc.sigma,
        seed: mc.seed,
        samples: mc.samples,
    }
}

fn cmd_robustness(c: RobustnessCommand, mb: &mut ManifestBuilder) -> Result<()> {
    match c {
        RobustnessCommand::Wire { wire, margin, mc } => {
            mb.seed("monte_carlo", mc.seed);
            let g = wire.gadget(margin.margin)?;
            let mut v = to_value(&wire_success_probability(&g, &spec_of(&mc))?)?;
            v["gadget"] = to_value(&g)?;
            emit_json(mc.out.as_deref(), v, mb)
        }
        RobustnessCommand::Crossing { crossing, margin, mc } => {
            mb.seed("monte_carlo", mc.seed);
            let g = crossing.gadget(margin.margin)?;
            let mut v = to_value(&crossing_success_probability(&g, &spec_of(&mc))?)?;
            v["gadget"] = to_value(&g)?;
            emit_json(mc.out.as_deref(), v, mb)
        }
        RobustnessCommand::Moments { wire, margin, mc } => {
            mb.seed("monte_carlo", mc.seed);
            let g = wire.gadget(margin.margin)?;
            let mut v = to_value(&empirical_vs_analytic(&g, &spec_of(&mc))?)?;
            v["gadget"] = to_value(&g)?;
            emit_json(mc.out.as_deref(), v, mb)
        }
        RobustnessCommand::Sweep {
            gadget,
            wire,
            crossing,
            margin,
            sigma_max,
            points,
            mc,
        } => {
            mb.seed("monte_carlo", mc.seed);
            if !(sigma_max.is_finite() && sigma_max >= 0.0) || points == 0 {
                return Err(Error::input(
                    "the σ grid needs a non-negative maximum and at least one point",
                ));
            }
            let g = match gadget {
                GadgetChoice::Wire => wire.gadget(margin.margin)?,
                GadgetChoice::Crossing => crossing.gadget(margin.margin)?,
            };
            let curve = success_curve(&g, &sigma_grid(sigma_max, points), mc.samples, mc.seed)?;
            let rows: Vec<Vec<String>> = curve
                .iter()
                .map(|p| {
                    vec![
                        p.sigma.to_string(),
                        p.success_probability.to_string(),
                        p.standard_error.to_string(),
                    ]
                })
                .collect();
            let m = mb.finish();
            let text = table_csv(&["sigma", "success_probability", "standard_error"], &rows, Some(&m))?;
            emit(mc.out.as_deref(), &text, &m)
        }
    }
}

/// Graph, optional ground set and optional logical projection for files
/// accepted by `postprocess`.
fn load_graph(path: &Path) -> Result<(MwisGraph, Option<SolutionSet>, Option<EmbeddedInstance>)> {
    match read_instance(path)? {
        Instance::Embedding(e) => {
            let g = e.graph()?;
            let ground = (e.len() <= IMPLICIT_SOLVE_CAP)
                .then(|| solve_embedded(&e, InteractionModel::Ideal, &RydbergParams::default()))
                .transpose()?;
            Ok((g, ground, Some(*e)))
        }
        Instance::Problem(crate::embed::LogicalProblem::Mwis(g), _) => {
            let ground = (g.len() <= IMPLICIT_SOLVE_CAP)
                .then(|| crate::solver::brute_force_mwis_capped(&g, true, IMPLICIT_SOLVE_CAP))
                .transpose()?;
            Ok((g, ground, None))
        }
        Instance::Problem(crate::embed::LogicalProblem::Qubo(_), _) => Err(Error::Unsupported(
            "post-processing needs an MWIS graph; embed the QUBO first".into(),
        )),
    }
}

fn cmd_postprocess(a: PostprocessArgs, mb: &mut ManifestBuilder) -> Result<()> {
    mb.input(&a.graph)?.input(&a.samples)?;
    mb.seed("postprocess", a.seed);
    let (graph, ground, emb) = load_graph(&a.graph)?;
    let batch = read_samples(&a.samples, a.lost_atom_marker)?;
    let table = rank_configurations(&graph, &batch, a.pipeline, ground.as_ref(), a.seed)?;
    let logical = |c: &crate::graph::Configuration| -> Result<String> {
        match &emb {
            Some(e) => Ok(extract_logical(e, c)?.to_string()),
            None => Ok(String::new()),
        }
    };
    match a.format {
        TableFormat::Json => {
            let mut v = to_value(&table)?;
            if emb.is_some() {
                let proj: Vec<String> = table
                    .rows
                    .iter()
                    .map(|r| logical(&r.configuration))
                    .collect::<Result<_>>()?;
                v["logical_projections"] = to_value(&proj)?;
            }
            emit_json(a.out.as_deref(), v, mb)
        }
        TableFormat::Csv => {
            let m = mb.finish();
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    Ok(vec![
                        r.configuration.to_string(),
                        r.count.to_string(),
                        r.frequency.to_string(),
                        r.cost.to_string(),
                        r.independent.to_string(),
                        r.ground.map_or(String::new(), |g| g.to_string()),
                        logical(&r.configuration)?,
                    ])
                })
                .collect::<Result<_>>()?;
            let mut text = table_csv(
                &[
                    "bitstring",
                    "count",
                    "frequency",
                    "cost",
                    "independent",
                    "ground",
                    "logical",
                ],
                &rows,
                Some(&m),
            )?;
            if let Some(p) = table.ground_state_probability {
                text.push_str(&format!("# ground_state_probability={p}\n"));
            }
            emit(a.out.as_deref(), &text, &m)
        }
    }
}

fn cmd_baseline(a: BaselineArgs, mb: &mut ManifestBuilder) -> Result<()> {
    mb.input(&a.embedding)?;
    mb.seed("baseline", a.seed);
    let emb = read_embedding(&a.embedding)?;
    let graph = emb.graph()?;
    let ground = solve_embedded(&emb, InteractionModel::Ideal, &RydbergParams::default())?;
    let stats = sampler_baseline(&graph, &ground, a.n, a.repeats, a.seed)?;
    let mut v = json!({ "random": stats, "ground_degeneracy": ground.degeneracy() });
    if let Some(p) = &a.samples {
        mb.input(p)?;
        let batch = read_samples(p, a.lost_atom_marker)?;
        let t = rank_configurations(&graph, &batch, Pipeline::ReduceAdd, Some(&ground), a.seed)?;
        v["measured"] = json!({
            "source": p.display().to_string(),
            "shots": t.total,
            "ground_state_probability": t.ground_state_probability,
        });
    }
    emit_json(a.out.as_deref(), v, mb)
}

fn cmd_fixtures(c: FixturesCommand) -> Result<()> {
    match c {
        FixturesCommand::List => {
            let list: Vec<Value> = all_fixtures()?
                .into_iter()
                .map(|f| {
                    let kind = match f.problem {
                        ProblemFile::Mwis { .. } => "mwis",
                        ProblemFile::Qubo { .. } => "qubo",
                    };
                    json!({ "name": f.name, "type": kind, "description": f.description })
                })
                .collect();
            print_stdout(&to_json_pretty(&list)?)?;
            Ok(())
        }
        FixturesCommand::Export { names, dir } => {
            let fixtures = if names.is_empty() {
                all_fixtures()?
            } else {
                names.iter().map(|n| fixture(n)).collect::<Result<_>>()?
            };
            let mut written = Vec::new();
            for f in fixtures {
                let path = dir.join(format!("{}.json", f.name));
                write_text(&path, &to_json_pretty(&f.problem)?)?;
                written.push(path.display().to_string());
            }
            print_stdout(&to_json_pretty(&written)?)?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    // Nested subcommands are only built when reached, so walk every path.
    #[test]
    fn every_subcommand_builds() {
        fn walk(cmd: &clap::Command, path: &mut Vec<String>) {
            let mut args = vec!["rydwire".to_string()];
            args.extend(path.iter().cloned());
            args.push("--help".into());
            let err = Cli::try_parse_from(&args).unwrap_err();
            assert_eq!(err.kind(), clap::error::ErrorKind::DisplayHelp, "{path:?}");
            for sub in cmd.get_subcommands().filter(|s| s.get_name() != "help") {
                path.push(sub.get_name().to_string());
                walk(sub, path);
                path.pop();
            }
        }
        walk(&Cli::command(), &mut Vec::new());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["rydwire", "embed", "--bogus"]), 2);
        assert_eq!(run(["rydwire"]), 2);
        assert_eq!(run(["rydwire", "--help"]), 0);
    }

    #[test]
    fn manifest_wraps_non_objects() {
        let mb = ManifestBuilder::new("t", json!({}), 1);
        let v = with_manifest(json!([1, 2]), &mb.finish()).unwrap();
        assert_eq!(v["result"], json!([1, 2]));
        assert!(v["manifest"]["tool"].is_string());
    }
}
