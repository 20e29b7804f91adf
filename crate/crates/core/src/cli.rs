//! Experiment configuration, the simulate/estimate/validate/sweep commands
//! and their file formats.
//!
//! Files written under the output directory:
//! - `record.csv`: `t,value,clean_value`
//! - `control.csv`: `t,theta,bx,by`
//! - `metadata.json`: everything needed to regenerate the record
//! - `estimate.json`: BFN estimates, complex entries as `{re, im}`
//! - `vk.csv`, `ztrace.csv`: error diagnostics (only with a known truth)
//! - `validation.json`, `response.csv`: oracle comparison
//! - `sweep.csv`: one row per (seed, gamma, noise) run
//!
//! Exit codes: 0 ok, 1 I/O, 2 invalid config, 3 precondition resampling
//! exhausted, 4 integration failure, 5 record grid mismatch, 6 observer
//! blowup, 7 unobservable control.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bfn::{envelope_decreasing, run_bfn, BfnOptions, BfnRun};
use crate::controls::{check_theorem_precondition, precondition_holds, sample_random_field, ControlField};
use crate::dynamics::{add_noise, simulate_truth, MeasurementRecord, PhysicsConfig, TruthRun};
use crate::error::{Error, Result};
use crate::oracle::{build_response, reconstruct};
use crate::qops::{self, CMatrix, DensityMatrix};
use crate::rng::{stream_rng, Stream};
use crate::serial::MatrixJson;

pub const RECORD_FILE: &str = "record.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const CONTROL_FILE: &str = "control.csv";
pub const ESTIMATE_FILE: &str = "estimate.json";
pub const VK_FILE: &str = "vk.csv";
pub const ZTRACE_FILE: &str = "ztrace.csv";
pub const VALIDATION_FILE: &str = "validation.json";
pub const RESPONSE_FILE: &str = "response.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

pub const PRECONDITION_HYPOTHESIS: &str = "B_x(0)Ḃ_y(0)−B_y(0)Ḃ_x(0) ≠ 0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[value(name = "paper-2level")]
    #[serde(rename = "paper-2level")]
    Paper2Level,
    #[value(name = "paper-spin1")]
    #[serde(rename = "paper-spin1")]
    PaperSpin1,
}

/// Where the control phase comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControlSpec {
    /// `physics.n_knots` uniform phases drawn from the control stream.
    Random,
    /// Phases at equally spaced knots, endpoints included.
    Knots { phases: Vec<f64> },
    /// Explicit `(t, theta)` table.
    Table { times: Vec<f64>, thetas: Vec<f64> },
    /// `t,theta[,...]` CSV file.
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedState {
    RandomPure,
    PaperSpin1,
    MaximallyMixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthSpec {
    Named(NamedState),
    Matrix(MatrixJson),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmitFlags {
    pub vk: bool,
    pub ztrace: bool,
    pub record: bool,
    pub estimate: bool,
    pub response: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        EmitFlags {
            vk: true,
            ztrace: true,
            record: true,
            estimate: true,
            response: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub physics: PhysicsConfig,
    #[serde(default = "default_control")]
    pub control: ControlSpec,
    #[serde(default)]
    pub truth_state: Option<TruthSpec>,
    #[serde(default = "default_iterations")]
    pub n_iterations: usize,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub emit: EmitFlags,
}

fn default_control() -> ControlSpec {
    ControlSpec::Random
}

fn default_iterations() -> usize {
    10
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

/// `(|0><0| + |0><2| + |2><0| + |2><2|) / 2` in the `m = 1, 0, -1` basis.
pub fn paper_spin_one_state() -> DensityMatrix {
    let mut m = CMatrix::zeros(3, 3);
    for (i, j) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
        m[(i, j)] = 0.5.into();
    }
    DensityMatrix::state(m).expect("fixed pure state")
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Paper2Level => ExperimentConfig {
                physics: PhysicsConfig::paper_two_level(),
                control: ControlSpec::Random,
                truth_state: Some(TruthSpec::Named(NamedState::RandomPure)),
                n_iterations: 10,
                outputs: default_outputs(),
                emit: EmitFlags::default(),
            },
            Preset::PaperSpin1 => ExperimentConfig {
                physics: PhysicsConfig::paper_spin_one(),
                control: ControlSpec::Random,
                truth_state: Some(TruthSpec::Named(NamedState::PaperSpin1)),
                n_iterations: 50,
                outputs: default_outputs(),
                emit: EmitFlags::default(),
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        if self.n_iterations == 0 {
            return Err(Error::InvalidConfig("n_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn resolve_control(&self) -> Result<ResolvedControl> {
        let cfg = &self.physics;
        let resolved = match &self.control {
            ControlSpec::Random => {
                let field = sample_random_field(cfg, cfg.rng_seed)?;
                ResolvedControl {
                    spec: ControlSpec::Knots {
                        phases: field.knot_phases().to_vec(),
                    },
                    field,
                }
            }
            ControlSpec::Knots { phases } => ResolvedControl {
                field: ControlField::from_knots(cfg.b0, cfg.t_horizon, phases)?,
                spec: self.control.clone(),
            },
            ControlSpec::Table { times, thetas } => ResolvedControl {
                field: ControlField::from_table(cfg.b0, times.clone(), thetas.clone())?,
                spec: self.control.clone(),
            },
            ControlSpec::Csv { path } => {
                let field = ControlField::read_csv(BufReader::new(File::open(path)?), cfg.b0)?;
                ResolvedControl {
                    spec: ControlSpec::Table {
                        times: field.knot_times().to_vec(),
                        thetas: field.knot_phases().to_vec(),
                    },
                    field,
                }
            }
        };
        if (resolved.field.t_horizon() - cfg.t_horizon).abs() > 1e-12 * cfg.t_horizon {
            return Err(Error::GridMismatch(format!(
                "control covers [0, {}], configuration horizon is {}",
                resolved.field.t_horizon(),
                cfg.t_horizon
            )));
        }
        Ok(resolved)
    }

    pub fn resolve_truth(&self) -> Result<Option<DensityMatrix>> {
        let dim = self.physics.dim();
        let state = match &self.truth_state {
            None => return Ok(None),
            Some(TruthSpec::Named(NamedState::RandomPure)) => {
                DensityMatrix::random_pure(dim, &mut stream_rng(self.physics.rng_seed, Stream::TruthState))
            }
            Some(TruthSpec::Named(NamedState::MaximallyMixed)) => DensityMatrix::maximally_mixed(dim),
            Some(TruthSpec::Named(NamedState::PaperSpin1)) => paper_spin_one_state(),
            Some(TruthSpec::Matrix(m)) => DensityMatrix::state(m.to_matrix()?)?,
        };
        if state.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: state.dim(),
            });
        }
        Ok(Some(state))
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedControl {
    pub field: ControlField,
    /// Knots or table that rebuild `field` exactly.
    pub spec: ControlSpec,
}

/// Command-line values that take precedence over the configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iterations: Option<usize>,
    pub noise_meas: Option<f64>,
    pub noise_field: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    pub fn apply_physics(&self, physics: &mut PhysicsConfig) {
        if let Some(seed) = self.seed {
            physics.rng_seed = seed;
        }
        if let Some(level) = self.noise_meas {
            physics.noise_meas = level;
        }
        if let Some(level) = self.noise_field {
            physics.noise_field = level;
        }
    }

    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        self.apply_physics(&mut cfg.physics);
        if let Some(n) = self.iterations {
            cfg.n_iterations = n;
        }
        if let Some(out) = &self.out {
            cfg.outputs = out.clone();
        }
    }
}

/// A simulated experiment: control, true state, its trajectory and the
/// (possibly noisy) record.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub control: ResolvedControl,
    pub truth: DensityMatrix,
    pub truth_run: TruthRun,
    pub record: MeasurementRecord,
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    cfg.validate()?;
    let control = cfg.resolve_control()?;
    let truth = cfg
        .resolve_truth()?
        .ok_or_else(|| Error::InvalidConfig("simulation needs a truth_state".into()))?;
    let truth_run = simulate_truth(&truth, &control.field, &cfg.physics)?;
    let record = add_noise(&truth_run.record, cfg.physics.noise_meas, cfg.physics.rng_seed);
    Ok(Simulation {
        control,
        truth,
        truth_run,
        record,
    })
}

/// Simulates and estimates in one process.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(Simulation, BfnRun)> {
    let sim = simulate(cfg)?;
    let run = run_bfn(
        &sim.record,
        &sim.control.field,
        &cfg.physics,
        &BfnOptions::iterations(cfg.n_iterations),
        Some(&sim.truth_run.trajectory),
    )?;
    Ok((sim, run))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub physics: PhysicsConfig,
    pub control: ControlSpec,
    pub truth_state: MatrixJson,
    pub n_iterations: usize,
    /// Master seed and the stream index of each random consumer.
    pub seeds: BTreeMap<String, u64>,
    pub noise_model: BTreeMap<String, String>,
    pub precondition_discriminant: f64,
    pub knot_placement: String,
    pub record_file: String,
    pub samples: usize,
    pub dt: f64,
}

impl Metadata {
    pub fn new(cfg: &ExperimentConfig, sim: &Simulation) -> Self {
        let seeds = BTreeMap::from([
            ("master".to_string(), cfg.physics.rng_seed),
            ("control_stream".to_string(), Stream::Control as u64),
            ("truth_state_stream".to_string(), Stream::TruthState as u64),
            ("measurement_noise_stream".to_string(), Stream::MeasurementNoise as u64),
            ("field_noise_stream".to_string(), Stream::FieldNoise as u64),
        ]);
        let noise_model = BTreeMap::from([
            ("measurement".to_string(), "iid-gaussian sigma=noise_meas*rms(clean record)".to_string()),
            ("field".to_string(), "iid-gaussian per grid node sigma=noise_field*b0, observer only".to_string()),
            ("rng".to_string(), "chacha8 seed_from_u64(master), stream per consumer".to_string()),
        ]);
        Metadata {
            physics: cfg.physics.clone(),
            control: sim.control.spec.clone(),
            truth_state: MatrixJson::from(sim.truth.matrix()),
            n_iterations: cfg.n_iterations,
            seeds,
            noise_model,
            precondition_discriminant: check_theorem_precondition(&sim.control.field),
            knot_placement: "uniform on [0, T], both endpoints included".to_string(),
            record_file: RECORD_FILE.to_string(),
            samples: sim.record.len(),
            dt: cfg.physics.dt(),
        }
    }

    /// The experiment this metadata describes.
    pub fn to_config(&self, outputs: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            physics: self.physics.clone(),
            control: self.control.clone(),
            truth_state: Some(TruthSpec::Matrix(self.truth_state.clone())),
            n_iterations: self.n_iterations,
            outputs,
            emit: EmitFlags::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}

pub fn write_record_csv<W: Write>(writer: W, record: &MeasurementRecord) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["t", "value", "clean_value"])?;
    for i in 0..record.len() {
        out.serialize((record.times[i], record.values[i], record.clean_values[i]))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `t,value[,clean_value]`; a missing clean column is filled with the
/// measured values.
pub fn read_record_csv<R: Read>(reader: R) -> Result<MeasurementRecord> {
    let mut input = csv::Reader::from_reader(reader);
    let headers = input.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let t_col = find("t").ok_or_else(|| Error::InvalidConfig("record CSV lacks a 't' column".into()))?;
    let v_col = find("value").ok_or_else(|| Error::InvalidConfig("record CSV lacks a 'value' column".into()))?;
    let c_col = find("clean_value");
    let mut record = MeasurementRecord {
        times: Vec::new(),
        values: Vec::new(),
        clean_values: Vec::new(),
    };
    for (line, row) in input.records().enumerate() {
        let row = row?;
        let parse = |i: usize| {
            row.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidConfig(format!("bad record CSV row {}", line + 2)))
        };
        let value = parse(v_col)?;
        record.times.push(parse(t_col)?);
        record.values.push(value);
        record.clean_values.push(match c_col {
            Some(c) => parse(c)?,
            None => value,
        });
    }
    Ok(record)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut out = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Writes the record, control samples and metadata.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    let sim = simulate(cfg)?;
    let dir = &cfg.outputs;
    if cfg.emit.record {
        write_record_csv(create(dir, RECORD_FILE)?, &sim.record)?;
    }
    sim.control
        .field
        .write_csv(create(dir, CONTROL_FILE)?, cfg.physics.steps_per_pass)?;
    let meta = Metadata::new(cfg, &sim);
    write_json(dir, METADATA_FILE, &meta)?;
    Ok(json!({
        "command": "simulate",
        "samples": sim.record.len(),
        "purity": sim.truth.purity(),
        "precondition_discriminant": meta.precondition_discriminant,
        "outputs": dir,
    }))
}

/// Everything an estimate needs, from the record and its metadata.
#[derive(Debug, Clone)]
pub struct EstimateInputs {
    pub physics: PhysicsConfig,
    pub field: ControlField,
    pub record: MeasurementRecord,
    pub truth: Option<DensityMatrix>,
    pub n_iterations: usize,
}

/// Loads a record. If `metadata.json` sits next to it, the metadata
/// supplies physics, control and truth (with `overrides` on top);
/// otherwise they come from `cfg`.
pub fn load_inputs(cfg: &ExperimentConfig, record_path: &Path, overrides: &Overrides) -> Result<EstimateInputs> {
    let record = read_record_csv(BufReader::new(File::open(record_path)?))?;
    let meta_path = record_path.parent().unwrap_or(Path::new(".")).join(METADATA_FILE);
    let source = if meta_path.is_file() {
        let meta = Metadata::load(&meta_path)?;
        let mut replay = meta.to_config(cfg.outputs.clone());
        replay.n_iterations = cfg.n_iterations;
        overrides.apply_physics(&mut replay.physics);
        replay
    } else {
        cfg.clone()
    };
    source.validate()?;
    record.check_grid(&source.physics)?;
    Ok(EstimateInputs {
        field: source.resolve_control()?.field,
        truth: source.resolve_truth()?,
        physics: source.physics,
        record,
        n_iterations: source.n_iterations,
    })
}

pub fn estimate(inputs: &EstimateInputs) -> Result<BfnRun> {
    let truth = match &inputs.truth {
        Some(state) => Some(simulate_truth(state, &inputs.field, &inputs.physics)?.trajectory),
        None => None,
    };
    run_bfn(
        &inputs.record,
        &inputs.field,
        &inputs.physics,
        &BfnOptions::iterations(inputs.n_iterations),
        truth.as_deref(),
    )
}

pub fn cmd_estimate(cfg: &ExperimentConfig, record_path: &Path, overrides: &Overrides) -> Result<serde_json::Value> {
    cfg.validate()?;
    let inputs = load_inputs(cfg, record_path, overrides)?;
    let run = estimate(&inputs)?;
    let dir = &cfg.outputs;
    if cfg.emit.estimate {
        write_json(dir, ESTIMATE_FILE, &run.to_json())?;
    }
    if run.has_truth() {
        if cfg.emit.vk {
            run.write_vk_csv(create(dir, VK_FILE)?)?;
        }
        if cfg.emit.ztrace {
            run.write_ztrace_csv(create(dir, ZTRACE_FILE)?)?;
        }
    }
    Ok(json!({
        "command": "estimate",
        "iterations": run.iterations,
        "final_v": run.final_v(),
        "v_ratio": run.final_v().map(|v| v / run.vk_sequence[0]),
        "fidelity": run.fidelity_vs_truth,
        "final_min_eigenvalue": run.min_eigenvalues.last(),
        "final_surrogate_residual": run.surrogate_residuals.last(),
        "max_trace_drift": run.max_trace_drift,
        "max_hermitian_drift": run.max_hermitian_drift,
        "wall_seconds": run.wall_seconds,
        "seconds_per_iteration": run.wall_seconds / run.iterations as f64,
        "outputs": dir,
    }))
}

/// Side-by-side oracle and BFN reconstructions of one record.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub observable: bool,
    pub failed_hypothesis: Option<String>,
    pub precondition_discriminant: f64,
    pub precondition_holds: bool,
    pub response_rank: usize,
    pub expected_rank: usize,
    pub condition_number: f64,
    pub singular_values: Vec<f64>,
    pub oracle_estimate: Option<MatrixJson>,
    pub oracle_residual_norm: Option<f64>,
    pub bfn_estimate: MatrixJson,
    pub bfn_iterations: usize,
    /// Frobenius distance between the oracle and BFN estimates.
    pub distance: Option<f64>,
    pub oracle_fidelity_vs_truth: Option<f64>,
    pub bfn_fidelity_vs_truth: Option<f64>,
}

pub fn validate(inputs: &EstimateInputs) -> Result<(ValidationReport, crate::oracle::LinearResponse)> {
    let response = build_response(&inputs.field, &inputs.physics)?;
    let run = estimate(inputs)?;
    let discriminant = check_theorem_precondition(&inputs.field);
    let holds = precondition_holds(&inputs.field);
    let expected_rank = response.basis.len();
    let (oracle, failed) = match reconstruct(&inputs.record, &response) {
        Ok(est) => (Some(est), None),
        Err(Error::Unobservable { rank, expected }) => {
            let hypothesis = if inputs.physics.spin.is_two_level() && !holds {
                format!("{PRECONDITION_HYPOTHESIS} violated (value {discriminant:e})")
            } else {
                format!("response rank {rank} < {expected}")
            };
            (None, Some(hypothesis))
        }
        Err(e) => return Err(e),
    };
    let truth = inputs.truth.as_ref();
    let oracle_fidelity = match (&oracle, truth) {
        (Some(o), Some(t)) => Some(qops::fidelity(&o.estimate, t)?),
        _ => None,
    };
    let report = ValidationReport {
        observable: oracle.is_some(),
        failed_hypothesis: failed,
        precondition_discriminant: discriminant,
        precondition_holds: holds,
        response_rank: response.rank(),
        expected_rank,
        condition_number: response.condition_number(),
        singular_values: response.singular_values.clone(),
        oracle_estimate: oracle.as_ref().map(|o| MatrixJson::from(o.estimate.matrix())),
        oracle_residual_norm: oracle.as_ref().map(|o| o.residual_norm),
        bfn_estimate: MatrixJson::from(run.final_estimate.matrix()),
        bfn_iterations: run.iterations,
        distance: oracle
            .as_ref()
            .map(|o| qops::frobenius_distance(o.estimate.matrix(), run.final_estimate.matrix())),
        oracle_fidelity_vs_truth: oracle_fidelity,
        bfn_fidelity_vs_truth: run.fidelity_vs_truth,
    };
    Ok((report, response))
}

/// Writes `validation.json`; an unobservable control is reported and then
/// returned as an error so the process exits with code 7.
pub fn cmd_validate(cfg: &ExperimentConfig, record_path: &Path, overrides: &Overrides) -> Result<serde_json::Value> {
    cfg.validate()?;
    let inputs = load_inputs(cfg, record_path, overrides)?;
    let (report, response) = validate(&inputs)?;
    let dir = &cfg.outputs;
    write_json(dir, VALIDATION_FILE, &report)?;
    if cfg.emit.response {
        response.write_csv(create(dir, RESPONSE_FILE)?, &inputs.record.times)?;
    }
    if let Some(hypothesis) = &report.failed_hypothesis {
        log::error!("failed hypothesis: {hypothesis}");
        return Err(Error::Unobservable {
            rank: report.response_rank,
            expected: report.expected_rank,
        });
    }
    Ok(json!({
        "command": "validate",
        "distance": report.distance,
        "response_rank": report.response_rank,
        "condition_number": report.condition_number,
        "oracle_fidelity": report.oracle_fidelity_vs_truth,
        "bfn_fidelity": report.bfn_fidelity_vs_truth,
        "outputs": dir,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub seeds: Vec<u64>,
    /// Observer gains gamma.
    pub gammas: Vec<f64>,
    /// Applied to both measurement and field noise.
    pub noise_levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub gamma: f64,
    pub noise: f64,
    pub iterations: usize,
    pub v0: f64,
    pub v_final: f64,
    pub v_ratio: f64,
    pub fidelity: f64,
    pub envelope_decreasing: bool,
    pub wall_seconds: f64,
}

/// Runs every combination in parallel; rows come back in grid order.
pub fn sweep(cfg: &ExperimentConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if cfg.truth_state.is_none() {
        return Err(Error::InvalidConfig("sweep needs a truth_state".into()));
    }
    let mut grid = Vec::new();
    for &seed in &spec.seeds {
        for &gamma in &spec.gammas {
            for &noise in &spec.noise_levels {
                grid.push((seed, gamma, noise));
            }
        }
    }
    grid.par_iter()
        .map(|&(seed, gamma, noise)| {
            let mut one = cfg.clone();
            one.physics.rng_seed = seed;
            one.physics.gamma_small = gamma;
            one.physics.noise_meas = noise;
            one.physics.noise_field = noise;
            let (_, run) = run_experiment(&one)?;
            let v0 = run.vk_sequence[0];
            let v_final = run.final_v().unwrap_or(f64::NAN);
            Ok(SweepRow {
                seed,
                gamma,
                noise,
                iterations: run.iterations,
                v0,
                v_final,
                v_ratio: v_final / v0,
                fidelity: run.fidelity_vs_truth.unwrap_or(f64::NAN),
                envelope_decreasing: envelope_decreasing(&run.vk_sequence),
                wall_seconds: run.wall_seconds,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn cmd_sweep(cfg: &ExperimentConfig, spec: &SweepSpec) -> Result<serde_json::Value> {
    let rows = sweep(cfg, spec)?;
    write_sweep_csv(create(&cfg.outputs, SWEEP_FILE)?, &rows)?;
    let mut fidelities: Vec<f64> = rows.iter().map(|r| r.fidelity).collect();
    fidelities.sort_by(f64::total_cmp);
    let median = fidelities.get(fidelities.len() / 2).copied();
    Ok(json!({
        "command": "sweep",
        "runs": rows.len(),
        "median_fidelity": median,
        "envelope_decreasing": rows.iter().filter(|r| r.envelope_decreasing).count(),
        "outputs": &cfg.outputs,
    }))
}

#[derive(Debug, Parser)]
#[command(name = "spin-bfn", version, about = "Initial-state reconstruction of measured spin ensembles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an experiment and write its record and metadata.
    Simulate(CommonArgs),
    /// Run back-and-forth nudging on a record.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Record CSV (defaults to <out>/record.csv).
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Compare the BFN estimate with the linear-inversion oracle.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Run many experiments in parallel and merge them into one CSV.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of consecutive seeds starting at --seed.
        #[arg(long, default_value_t = 20)]
        runs: u64,
        /// Observer gains, comma separated (default: the configured one).
        #[arg(long, value_delimiter = ',')]
        gamma: Vec<f64>,
        /// Noise levels applied to measurement and field, comma separated.
        #[arg(long, value_delimiter = ',')]
        noise: Vec<f64>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "config")]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub noise_meas: Option<f64>,
    #[arg(long)]
    pub noise_field: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            iterations: self.iterations,
            noise_meas: self.noise_meas,
            noise_field: self.noise_field,
            out: self.out.clone(),
        }
    }

    /// Config file or preset (default `paper-2level`) with overrides applied.
    pub fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::preset(self.preset.unwrap_or(Preset::Paper2Level)),
        };
        self.overrides().apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Executes one command and returns the summary printed on stdout.
pub fn execute(cli: &Cli) -> Result<serde_json::Value> {
    match &cli.command {
        Command::Simulate(common) => cmd_simulate(&common.config()?),
        Command::Estimate { common, record } => {
            let cfg = common.config()?;
            let record = record.clone().unwrap_or_else(|| cfg.outputs.join(RECORD_FILE));
            cmd_estimate(&cfg, &record, &common.overrides())
        }
        Command::Validate { common, record } => {
            let cfg = common.config()?;
            let record = record.clone().unwrap_or_else(|| cfg.outputs.join(RECORD_FILE));
            cmd_validate(&cfg, &record, &common.overrides())
        }
        Command::Sweep {
            common,
            runs,
            gamma,
            noise,
        } => {
            let cfg = common.config()?;
            let first = cfg.physics.rng_seed;
            let spec = SweepSpec {
                seeds: (first..first + runs).collect(),
                gammas: if gamma.is_empty() { vec![cfg.physics.gamma_small] } else { gamma.clone() },
                noise_levels: if noise.is_empty() { vec![cfg.physics.noise_meas] } else { noise.clone() },
            };
            cmd_sweep(&cfg, &spec)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_to_reference_parameters() {
        let two = ExperimentConfig::preset(Preset::Paper2Level);
        let p = &two.physics;
        assert_eq!((p.gamma_big, p.gamma_small, p.b0, p.t_horizon, p.n_knots), (0.25, 0.25, 10.0, 1.0, 10));
        assert_eq!(two.n_iterations, 10);
        let one = ExperimentConfig::preset(Preset::PaperSpin1);
        let p = &one.physics;
        assert_eq!((p.gamma_big, p.gamma_small, p.b0, p.beta, p.g_f), (1.0, 1.0, 30.0, 10.0, 1.0));
        assert_eq!(one.n_iterations, 50);
        let rho = one.resolve_truth().unwrap().unwrap();
        let half = 0.5.into();
        let zero = 0.0.into();
        let expected = CMatrix::from_row_slice(3, 3, &[half, zero, half, zero, zero, zero, half, zero, half]);
        assert_eq!(rho.matrix(), &expected);
    }

    #[test]
    fn config_json_round_trip() {
        let mut cfg = ExperimentConfig::preset(Preset::PaperSpin1);
        cfg.control = ControlSpec::Knots {
            phases: vec![0.1, 0.2, 0.3, 0.4],
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let named: TruthSpec = serde_json::from_str("\"random-pure\"").unwrap();
        assert_eq!(named, TruthSpec::Named(NamedState::RandomPure));
        let minimal: ExperimentConfig =
            serde_json::from_value(json!({ "physics": PhysicsConfig::paper_two_level() })).unwrap();
        assert_eq!(minimal.control, ControlSpec::Random);
        assert_eq!(minimal.truth_state, None);
    }

    #[test]
    fn zero_iterations_rejected() {
        let mut cfg = ExperimentConfig::preset(Preset::Paper2Level);
        cfg.n_iterations = 0;
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn record_csv_round_trips_exactly() {
        let record = MeasurementRecord {
            times: vec![0.0, 0.5, 1.0],
            values: vec![0.1 + 0.2, -1e-17, std::f64::consts::PI],
            clean_values: vec![1.0 / 3.0, 0.0, -2.5],
        };
        let mut buf = Vec::new();
        write_record_csv(&mut buf, &record).unwrap();
        assert!(buf.starts_with(b"t,value,clean_value\n"));
        assert_eq!(read_record_csv(buf.as_slice()).unwrap(), record);
        let bare = read_record_csv("t,value\n0,1\n1,2\n".as_bytes()).unwrap();
        assert_eq!(bare.clean_values, vec![1.0, 2.0]);
    }

    #[test]
    fn maximally_mixed_truth_gives_zero_record() {
        let mut cfg = ExperimentConfig::preset(Preset::Paper2Level);
        cfg.physics.steps_per_pass = 200;
        cfg.truth_state = Some(TruthSpec::Named(NamedState::MaximallyMixed));
        let sim = simulate(&cfg).unwrap();
        assert!(sim.record.values.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn clap_surface() {
        let cli = Cli::try_parse_from([
            "spin-bfn",
            "sweep",
            "--preset",
            "paper-2level",
            "--seed",
            "3",
            "--runs",
            "2",
            "--gamma",
            "0.1,0.25",
            "--noise-meas",
            "0.1",
            "--out",
            "x",
        ])
        .unwrap();
        match cli.command {
            Command::Sweep { common, runs, gamma, .. } => {
                assert_eq!(runs, 2);
                assert_eq!(gamma, vec![0.1, 0.25]);
                let cfg = common.config().unwrap();
                assert_eq!(cfg.physics.rng_seed, 3);
                assert_eq!(cfg.physics.noise_meas, 0.1);
                assert_eq!(cfg.outputs, PathBuf::from("x"));
            }
            other => panic!("parsed {other:?}"),
        }
        assert!(Cli::try_parse_from(["spin-bfn", "estimate", "--preset", "paper-3level"]).is_err());
        assert!(Cli::try_parse_from(["spin-bfn", "estimate", "--config", "a.json", "--preset", "paper-spin1"]).is_err());
    }
}
