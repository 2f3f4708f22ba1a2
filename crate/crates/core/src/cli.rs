//! Command-line driver.
//!
//! Every command that writes files finishes by writing `manifest.json`,
//! which lists each emitted file with its SHA-256. Nothing written depends
//! on the clock, so repeating a command with the same config and seed
//! reproduces every file byte for byte.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 resource
//! cap, 4 invariant violation.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::amplitudes::{branch_weights_csv, collapse_full, AmplitudeVector, BranchSet, QuantumDynamics};
use crate::config_state::{successor_table, DynamicalState, FieldConfiguration, LatticeConfig, LATTICE_KEYS};
use crate::ensemble::{point_ensemble, push_forward, sample, Ensemble};
use crate::error::Error;
use crate::experiments::{
    born_trials, born_trials_against, collapse_level_sign_test, run_collapse_level_experiment,
    run_many_worlds_comparison, CollapsePolicy, ExperimentConfig, MetricsReport,
};
use crate::kvdoc::KvDocument;
use crate::schema::{recall, Pattern, SchemaMemory};
use crate::seeding::{derive_seed, derived_rng};

/// Extra keys accepted by `simulate`.
pub const INITIAL_STATE_KEYS: [&str; 2] = ["initial_current", "initial_previous"];

#[derive(Debug, Parser)]
#[command(name = "mindlattice", version, about = "Lattice-field simulator with collapse and schema experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the register accounting of a lattice config as JSON.
    Count {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve one initial state in the classical, statistical or quantum description.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Required for the statistical and quantum modes.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Classical)]
        mode: Mode,
        /// Overrides `n_timesteps` from the config.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run the collapse-placement, no-collapse branching and Born-rule experiments.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Store random patterns and recall one of them from a corrupted cue.
    RecallDemo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Classical,
    Statistical,
    Quantum,
}

/// A failed command: the exit code and the message for stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidConfig(_)
            | Error::ConfigParse { .. }
            | Error::InvalidPattern(_)
            | Error::DimensionMismatch { .. }
            | Error::QuantizationTooCoarse(_) => EXIT_CONFIG,
            Error::ResourceCap { .. } | Error::IndexOutOfRange { .. } => EXIT_RESOURCE,
            _ => EXIT_INVARIANT,
        };
        CliError { code, message: e.to_string() }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
}

/// Collects output files and writes the manifest last.
struct OutputDir {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputDir {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.files.push((name.to_string(), hex::encode(Sha256::digest(contents.as_bytes()))));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(self, subcommand: &str, config: &Path, seed: Option<u64>) -> Result<(), CliError> {
        let manifest = json!({
            "subcommand": subcommand,
            "config": config.display().to_string(),
            "seed": seed,
            "out": self.dir.display().to_string(),
            "version": crate::experiments::ARTIFACT_VERSION,
            "files": self.files.iter().map(|(n, h)| json!({"name": n, "sha256": h})).collect::<Vec<_>>(),
        });
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_error(&path, e))
    }
}

fn read_document(path: &Path) -> Result<KvDocument, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError { code: EXIT_CONFIG, message: format!("{}: {e}", path.display()) })?;
    KvDocument::parse(&text).map_err(|e| CliError::from(e).with_path(path))
}

impl CliError {
    fn with_path(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Count { config, out } => cmd_count(&config, out.as_deref()),
        Command::Simulate { config, seed, out, mode, steps } => cmd_simulate(&config, seed, &out, mode, steps),
        Command::Experiment { config, seed, out } => cmd_experiment(&config, seed, &out),
        Command::RecallDemo { config, seed, out } => cmd_recall_demo(&config, seed, &out),
    }
}

fn lattice_from(path: &Path, extra: &[&str]) -> Result<(KvDocument, LatticeConfig), CliError> {
    let doc = read_document(path)?;
    let known: Vec<&str> = LATTICE_KEYS.iter().chain(extra).copied().collect();
    doc.reject_unknown(&known).map_err(|e| CliError::from(e).with_path(path))?;
    let cfg = LatticeConfig::from_document(&doc).map_err(|e| CliError::from(e).with_path(path))?;
    Ok((doc, cfg))
}

pub fn cmd_count(config: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let (_, cfg) = lattice_from(config, &[])?;
    let report = cfg.register_accounting();
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(dir) = out {
        let mut o = OutputDir::create(dir)?;
        o.write_json("register_report.json", &report)?;
        o.finish("count", config, None)?;
    }
    Ok(())
}

/// Initial state from `initial_current` / `initial_previous`, defaulting to
/// a unit excitation of site 0, field 0 (all zeros when the range is `{0}`).
fn initial_state(doc: &KvDocument, cfg: &LatticeConfig) -> Result<DynamicalState, Error> {
    let field = |key: &str| -> Result<Option<FieldConfiguration>, Error> {
        match doc.get_json::<Vec<i64>>(key)? {
            None => Ok(None),
            Some(values) => FieldConfiguration::new(cfg, values).map(Some).map_err(|e| Error::ConfigParse {
                line: doc.line_of(key).unwrap_or(0),
                message: format!("`{key}`: {e}"),
            }),
        }
    };
    match (field("initial_current")?, field("initial_previous")?) {
        (None, None) if cfg.half_range() > 0 => DynamicalState::excitation(cfg, 0, 0, 1),
        (current, previous) => DynamicalState::new(
            current.unwrap_or_else(|| FieldConfiguration::zeros(cfg)),
            previous.unwrap_or_else(|| FieldConfiguration::zeros(cfg)),
        ),
    }
}

#[derive(Serialize)]
struct TrajectoryPoint {
    step: usize,
    index: usize,
    current: Vec<i64>,
    previous: Vec<i64>,
}

fn trajectory_json(cfg: &LatticeConfig, indices: &[usize]) -> Result<String, Error> {
    let mut points = Vec::with_capacity(indices.len());
    for (step, &m) in indices.iter().enumerate() {
        let s = DynamicalState::decode(m, cfg)?;
        points.push(TrajectoryPoint {
            step,
            index: m,
            current: s.current.values().to_vec(),
            previous: s.previous.values().to_vec(),
        });
    }
    let mut text = serde_json::to_string_pretty(&points).expect("trajectory serializes");
    text.push('\n');
    Ok(text)
}

fn require_seed(seed: Option<u64>, mode: Mode) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError { code: EXIT_CONFIG, message: format!("--seed is required in {mode:?} mode") })
}

pub fn cmd_simulate(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    mode: Mode,
    steps: Option<usize>,
) -> Result<(), CliError> {
    let (doc, cfg) = lattice_from(config, &INITIAL_STATE_KEYS)?;
    let start = initial_state(&doc, &cfg).map_err(|e| CliError::from(e).with_path(config))?;
    let steps = steps.unwrap_or(cfg.n_timesteps());
    let m0 = start.encode();
    let mut o = OutputDir::create(out)?;
    match mode {
        Mode::Classical => {
            let mut indices = vec![m0];
            let mut s = start;
            for _ in 0..steps {
                s = s.step_classical();
                indices.push(s.encode());
            }
            o.write("trajectory.json", &trajectory_json(&cfg, &indices)?)?;
        }
        Mode::Statistical => {
            let seed = require_seed(seed, mode)?;
            let size = cfg.dense_space_size()?;
            let map = successor_table(&cfg)?;
            let mut rng = derived_rng(seed, &[0]);
            let mut e: Ensemble = point_ensemble(m0, size)?;
            let mut snapshots = String::new();
            // one sampled member of the ensemble, followed along the bijection
            let mut m = sample(&e, &mut rng);
            let mut indices = vec![m];
            for step in 0..=steps {
                if step > 0 {
                    e = push_forward(&e, &map)?;
                    m = map[m];
                    indices.push(m);
                }
                let support: Vec<(usize, f64)> = e.support().into_iter().map(|k| (k, e.probabilities()[k])).collect();
                snapshots.push_str(&json!({"step": step, "support": support}).to_string());
                snapshots.push('\n');
            }
            o.write("ensembles.jsonl", &snapshots)?;
            o.write("trajectory.json", &trajectory_json(&cfg, &indices)?)?;
        }
        Mode::Quantum => {
            let seed = require_seed(seed, mode)?;
            cfg.dense_space_size()?;
            let dynamics = QuantumDynamics::new(&cfg)?;
            let mut rng = derived_rng(seed, &[0]);
            let mut a = AmplitudeVector::delta(m0, dynamics.space_size())?;
            let mut snapshots = String::new();
            let mut log = String::from("step,outcome,probability\n");
            let mut indices = Vec::with_capacity(steps + 1);
            for step in 0..=steps {
                if step > 0 {
                    a = dynamics.step(&a)?;
                }
                a.check_norm()?;
                let support: Vec<(usize, f64, f64)> =
                    a.support().into_iter().map(|k| (k, a.moduli()[k], a.phases()[k])).collect();
                snapshots.push_str(&json!({"step": step, "support": support}).to_string());
                snapshots.push('\n');
                let p = a.moduli().iter().map(|r| r * r).collect::<Vec<_>>();
                let (m, post) = collapse_full(&a, &mut rng);
                log.push_str(&format!("{step},{m},{:?}\n", p[m]));
                indices.push(m);
                a = post;
            }
            o.write("amplitudes.jsonl", &snapshots)?;
            o.write("collapses.csv", &log)?;
            o.write("trajectory.json", &trajectory_json(&cfg, &indices)?)?;
        }
    }
    o.finish("simulate", config, seed)
}

fn experiment_config(path: &Path, seed: u64) -> Result<ExperimentConfig, CliError> {
    let doc = read_document(path)?;
    ExperimentConfig::from_document(&doc, seed).map_err(|e| CliError::from(e).with_path(path))
}

pub fn cmd_experiment(config: &Path, seed: u64, out: &Path) -> Result<(), CliError> {
    let cfg = experiment_config(config, seed)?;
    let mut o = OutputDir::create(out)?;

    let reports = run_collapse_level_experiment(&cfg)?;
    o.write_json("collapse_level.json", &reports)?;
    let summary = collapse_level_sign_test(&cfg)?;
    o.write_json("sign_test.json", &summary)?;

    let no_collapse = run_many_worlds_comparison(&cfg.with_policy(CollapsePolicy::None))?;
    let control = run_many_worlds_comparison(&cfg.with_policy(CollapsePolicy::BranchLevelAfterSeparation))?;
    o.write_json("many_worlds.json", &json!({"no_collapse": no_collapse, "collapse_control": control}))?;
    o.write("branch_weights.csv", &branch_weights_csv(&no_collapse.final_weights))?;

    let n = cfg.born_samples;
    let born_seed = |k: u64| derive_seed(seed, &[7, k]);
    let uniform = AmplitudeVector::uniform(9)?;
    let pair = BranchSet::from_weights([
        ("0", Complex64::new(cfg.branching_bias.sqrt(), 0.0)),
        ("1", Complex64::new(0.0, (1.0 - cfg.branching_bias).sqrt())),
    ])?;
    let born = json!({
        "uniform_9": born_trials(&uniform, n, born_seed(0))?,
        "biased_pair": born_trials(&pair, n, born_seed(1))?,
        "adversarial_control": born_trials_against(&[0.1, 0.7, 0.2], &[0.7, 0.1, 0.2], n, born_seed(2))?,
    });
    o.write_json("born_trials.json", &born)?;

    let mut csv = String::from(MetricsReport::csv_header());
    for r in reports.iter().chain([&no_collapse.report, &control.report]) {
        csv.push_str(&r.csv_row());
    }
    o.write("metrics.csv", &csv)?;
    o.finish("experiment", config, Some(seed))
}

pub fn cmd_recall_demo(config: &Path, seed: u64, out: &Path) -> Result<(), CliError> {
    let cfg = experiment_config(config, seed)?;
    let mut rng = derived_rng(seed, &[0]);
    let mut memory = SchemaMemory::new(cfg.n_neurons, cfg.learning_rate, cfg.facilitation_threshold)?;
    let mut stored: Vec<Pattern> = Vec::with_capacity(cfg.n_patterns);
    while stored.len() < cfg.n_patterns {
        let p = Pattern::random(cfg.n_neurons, &mut rng)?;
        if stored.iter().all(|q| q.units() != p.units()) {
            memory = memory.facilitate(&p, cfg.facilitation_threshold)?;
            stored.push(p);
        }
    }
    let target = rng.random_range(0..stored.len());
    let cue = stored[target].with_random_flips(cfg.cue_flips, &mut rng);
    let outcome = recall(&memory, &cue, cfg.recall_sweeps)?;
    if outcome.trace.windows(2).any(|w| w[1].energy > w[0].energy + 1e-9) {
        return Err(Error::InvariantViolation("recall energy increased".into()).into());
    }
    let mut o = OutputDir::create(out)?;
    o.write("recall_trace.csv", &outcome.trace_csv())?;
    let final_energy = outcome.trace.last().map(|e| e.energy).unwrap_or(outcome.initial_energy);
    o.write_json(
        "recall.json",
        &json!({
            "seed": seed,
            "stored": stored.iter().map(Pattern::id).collect::<Vec<_>>(),
            "target": target,
            "cue": cue.id(),
            "recalled": outcome.pattern.id(),
            "recovered": outcome.pattern.units() == stored[target].units(),
            "converged": outcome.converged,
            "sweeps": outcome.sweeps,
            "initial_energy": outcome.initial_energy,
            "final_energy": final_energy,
            "version": crate::experiments::ARTIFACT_VERSION,
        }),
    )?;
    o.finish("recall-demo", config, Some(seed))
}
