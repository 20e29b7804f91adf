//! Back-and-forth nudging: a Luenberger-type observer run forward over the
//! record, then backward over the time-reflected record, repeatedly, with
//! the terminal state of each pass seeding the next.
//!
//! When the true trajectory is supplied the run also records the estimation
//! error `rho_tilde` on the unfolded time axis `[0, 2nT]`: forward pass `k`
//! covers `[2kT, (2k+1)T]` and compares against `rho(t)`, backward pass `k`
//! covers `[(2k+1)T, 2(k+1)T]` and compares against `rho(T - t)`.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::controls::{ControlField, FieldTable};
use crate::dynamics::{rk4_unfinished, Direction, MeasurementRecord, Model, OdeState, PhysicsConfig};
use crate::error::{Error, Result};
use crate::qops::{self, CMatrix, DensityMatrix};
use crate::rng::{stream_rng, Stream};
use crate::serial::MatrixJson;
use crate::tol;

/// Forward observer right-hand side at local time `t`, with `y` the
/// measurement at `t`.
pub fn observer_rhs_forward(
    rho_hat: &CMatrix,
    t: f64,
    field: &ControlField,
    y: f64,
    cfg: &PhysicsConfig,
) -> Result<CMatrix> {
    observer_rhs(rho_hat, t, field, y, cfg, Direction::Forward)
}

/// Backward observer right-hand side at local time `t`; the fields are read
/// at `T - t` and `y` must be the measurement at `T - t`.
pub fn observer_rhs_backward(
    rho_hat: &CMatrix,
    t: f64,
    field: &ControlField,
    y: f64,
    cfg: &PhysicsConfig,
) -> Result<CMatrix> {
    observer_rhs(rho_hat, t, field, y, cfg, Direction::Backward)
}

fn observer_rhs(
    rho_hat: &CMatrix,
    t: f64,
    field: &ControlField,
    y: f64,
    cfg: &PhysicsConfig,
    direction: Direction,
) -> Result<CMatrix> {
    if rho_hat.nrows() != cfg.dim() || rho_hat.ncols() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: rho_hat.nrows(),
        });
    }
    let model = Model::new(cfg)?;
    let (bx, by) = field.field_at(t, direction)?;
    Ok(model.observer_rhs(rho_hat, bx, by, y, direction))
}

#[derive(Debug, Clone)]
pub struct BfnOptions {
    /// Number of back-and-forth round trips.
    pub n_iterations: usize,
    /// Starting estimate; defaults to the maximally mixed state.
    pub initial_estimate: Option<CMatrix>,
    /// Stop once the weighted output residual of a round trip falls below
    /// this value.
    pub early_stop: Option<f64>,
}

impl BfnOptions {
    pub fn iterations(n_iterations: usize) -> Self {
        BfnOptions {
            n_iterations,
            initial_estimate: None,
            early_stop: None,
        }
    }
}

/// Per-node samples of one observer pass.
#[derive(Debug, Clone, Serialize)]
pub struct PassTrace {
    pub iteration: usize,
    pub direction: Direction,
    /// Global time of the first node.
    pub t_start: f64,
    /// Node spacing (two record intervals).
    pub dt: f64,
    /// `y_hat - y` at each node.
    pub innovation: Vec<f64>,
    /// `V(rho_tilde)`; empty without truth.
    pub v: Vec<f64>,
    /// `Z = tr(O rho_tilde)`; empty without truth.
    pub z: Vec<f64>,
    /// `X = tr(sx rho_tilde)`; two-level runs with truth only.
    pub x: Vec<f64>,
    /// `Y = tr(sy rho_tilde)`; two-level runs with truth only.
    pub y: Vec<f64>,
}

impl PassTrace {
    pub fn len(&self) -> usize {
        self.innovation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.innovation.is_empty()
    }

    pub fn time(&self, node: usize) -> f64 {
        self.t_start + node as f64 * self.dt
    }
}

#[derive(Debug, Clone)]
pub struct BfnRun {
    pub config: PhysicsConfig,
    /// Round trips actually performed.
    pub iterations: usize,
    pub early_stopped: bool,
    /// `rho_hat^f_k(0)` for `k = 0..=iterations`.
    pub estimates: Vec<CMatrix>,
    /// Minimum eigenvalue of each entry of `estimates`.
    pub min_eigenvalues: Vec<f64>,
    /// `V_k = V(rho_tilde(2kT))`; empty without truth.
    pub vk_sequence: Vec<f64>,
    /// `2 gamma * integral of g Z^2` over each round trip; empty without truth.
    pub weighted_residuals: Vec<f64>,
    /// Same weighting applied to the innovation `y_hat - y`.
    pub surrogate_residuals: Vec<f64>,
    pub passes: Vec<PassTrace>,
    pub final_raw: CMatrix,
    /// PSD projection of the last forward initial state.
    pub final_estimate: DensityMatrix,
    pub fidelity_vs_truth: Option<f64>,
    /// Largest `|tr(rho_hat) - 1|` seen at any node.
    pub max_trace_drift: f64,
    /// Largest anti-Hermitian part produced by a single RK4 step.
    pub max_hermitian_drift: f64,
    pub wall_seconds: f64,
}

impl BfnRun {
    pub fn has_truth(&self) -> bool {
        !self.vk_sequence.is_empty()
    }

    pub fn final_v(&self) -> Option<f64> {
        self.vk_sequence.last().copied()
    }

    /// `(t, iteration, direction, v, z, innovation)` rows in time order.
    pub fn write_ztrace_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["t", "iteration", "direction", "v", "z", "innovation"])?;
        for pass in &self.passes {
            for i in 0..pass.len() {
                let (v, z) = if pass.v.is_empty() {
                    (f64::NAN, f64::NAN)
                } else {
                    (pass.v[i], pass.z[i])
                };
                out.serialize((pass.time(i), pass.iteration, pass.direction.as_str(), v, z, pass.innovation[i]))?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// `(k, v_k, weighted_residual, surrogate_residual, min_eigenvalue)` rows.
    pub fn write_vk_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["k", "v_k", "weighted_residual", "surrogate_residual", "min_eigenvalue"])?;
        for k in 0..self.estimates.len() {
            let vk = self.vk_sequence.get(k).copied().unwrap_or(f64::NAN);
            let w = self.weighted_residuals.get(k).copied().unwrap_or(f64::NAN);
            let s = self.surrogate_residuals.get(k).copied().unwrap_or(f64::NAN);
            out.serialize((k, vk, w, s, self.min_eigenvalues[k]))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct View<'a> {
            config: &'a PhysicsConfig,
            iterations: usize,
            early_stopped: bool,
            vk_sequence: &'a [f64],
            weighted_residuals: &'a [f64],
            surrogate_residuals: &'a [f64],
            min_eigenvalues: &'a [f64],
            estimates: Vec<MatrixJson>,
            final_estimate: MatrixJson,
            final_raw: MatrixJson,
            fidelity_vs_truth: Option<f64>,
            max_trace_drift: f64,
            max_hermitian_drift: f64,
        }
        let view = View {
            config: &self.config,
            iterations: self.iterations,
            early_stopped: self.early_stopped,
            vk_sequence: &self.vk_sequence,
            weighted_residuals: &self.weighted_residuals,
            surrogate_residuals: &self.surrogate_residuals,
            min_eigenvalues: &self.min_eigenvalues,
            estimates: self.estimates.iter().map(MatrixJson::from).collect(),
            final_estimate: MatrixJson::from(self.final_estimate.matrix()),
            final_raw: MatrixJson::from(&self.final_raw),
            fidelity_vs_truth: self.fidelity_vs_truth,
            max_trace_drift: self.max_trace_drift,
            max_hermitian_drift: self.max_hermitian_drift,
        };
        serde_json::to_value(view).expect("run summary is always serializable")
    }
}

/// Weight `g` of the discrete decrease identity at local time `s` of a pass.
/// Forward: `exp(4 Gamma s)`; backward: `exp(4 Gamma (T - s))`.
pub fn g_weight(gamma_big: f64, t_horizon: f64, s: f64, direction: Direction) -> f64 {
    match direction {
        Direction::Forward => (4.0 * gamma_big * s).exp(),
        Direction::Backward => (4.0 * gamma_big * (t_horizon - s)).exp(),
    }
}

/// True when the tightest non-increasing upper envelope
/// `E_k = max_{j >= k} V_j` drops at every iteration.
pub fn envelope_decreasing(vk: &[f64]) -> bool {
    if vk.len() < 2 {
        return false;
    }
    let mut envelope = vk.to_vec();
    for k in (0..vk.len() - 1).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    envelope.windows(2).all(|w| w[1] < w[0])
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    dt * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

fn weighted_square_integral(cfg: &PhysicsConfig, pass: &PassTrace, samples: &[f64]) -> f64 {
    let weighted: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| g_weight(cfg.gamma_big, cfg.t_horizon, i as f64 * pass.dt, pass.direction) * s * s)
        .collect();
    trapezoid(&weighted, pass.dt)
}

struct PassContext<'a> {
    model: &'a Model,
    cfg: &'a PhysicsConfig,
    record: &'a MeasurementRecord,
    table: &'a FieldTable,
    truth: Option<&'a [CMatrix]>,
}

struct PassOutcome {
    end: CMatrix,
    trace: PassTrace,
    trace_drift: f64,
    hermitian_drift: f64,
}

fn run_pass(ctx: &PassContext<'_>, start: &CMatrix, iteration: usize, direction: Direction) -> Result<PassOutcome> {
    let n = ctx.cfg.steps_per_pass;
    let h = ctx.cfg.dt();
    let step = 2.0 * h;
    let nodes = n / 2 + 1;
    let two_level = ctx.cfg.spin.is_two_level();
    let observable = ctx.model.observable();
    let reflect = |i: usize| match direction {
        Direction::Forward => i,
        Direction::Backward => n - i,
    };
    let t_start = match direction {
        Direction::Forward => 2.0 * iteration as f64 * ctx.cfg.t_horizon,
        Direction::Backward => (2 * iteration + 1) as f64 * ctx.cfg.t_horizon,
    };
    let mut trace = PassTrace {
        iteration,
        direction,
        t_start,
        dt: step,
        innovation: Vec::with_capacity(nodes),
        v: Vec::new(),
        z: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
    };
    let bound = (tol::BLOWUP_RATE * ctx.cfg.gamma_big * ctx.cfg.t_horizon).exp() * (start.norm() + 1.0);
    let mut trace_drift: f64 = 0.0;
    let mut hermitian_drift: f64 = 0.0;
    let mut rho = start.clone();

    for node in 0..nodes {
        let i = 2 * node;
        let y_hat = qops::trace_product_re(observable, &rho);
        trace.innovation.push(y_hat - ctx.record.values[reflect(i)]);
        trace_drift = trace_drift.max((rho.trace() - Complex64::new(1.0, 0.0)).norm());
        if let Some(truth) = ctx.truth {
            let err = &rho - &truth[reflect(i)];
            trace.v.push(qops::lyapunov_v_unchecked(&err));
            trace.z.push(qops::trace_product_re(observable, &err));
            if two_level {
                let b = qops::bloch_decompose(&qops::hermitian_part(&err))?;
                trace.x.push(b.x);
                trace.y.push(b.y);
            }
        }
        if node + 1 == nodes {
            break;
        }
        let raw = rk4_unfinished(&rho, i as f64 * h, step, |t, r: &CMatrix| {
            let idx = (t / h).round() as usize;
            let (bx, by) = ctx.table.at(idx, direction);
            let y = ctx.record.values[reflect(idx)];
            ctx.model.observer_rhs(r, bx, by, y, direction)
        });
        hermitian_drift = hermitian_drift.max(qops::hermitian_asymmetry(&raw));
        rho = raw.finish();
        if !rho.all_finite() || rho.norm() > bound {
            return Err(Error::Blowup {
                iteration,
                direction,
                step: node,
            });
        }
    }
    Ok(PassOutcome {
        end: rho,
        trace,
        trace_drift,
        hermitian_drift,
    })
}

/// Runs `opts.n_iterations` forward/backward round trips on the record.
///
/// The observer reads its controls from the field sampled on the record
/// grid, corrupted by `cfg.noise_field * B0` Gaussian noise when requested.
/// Pass the true trajectory (sampled on the same grid) to fill the error
/// diagnostics; estimation itself only uses the record.
pub fn run_bfn(
    record: &MeasurementRecord,
    field: &ControlField,
    cfg: &PhysicsConfig,
    opts: &BfnOptions,
    truth: Option<&[CMatrix]>,
) -> Result<BfnRun> {
    let started = Instant::now();
    cfg.validate()?;
    record.check_grid(cfg)?;
    if opts.n_iterations == 0 {
        return Err(Error::InvalidConfig("need at least one iteration".into()));
    }
    if (field.t_horizon() - cfg.t_horizon).abs() > 1e-12 * cfg.t_horizon {
        return Err(Error::GridMismatch(format!(
            "control horizon {} differs from configured horizon {}",
            field.t_horizon(),
            cfg.t_horizon
        )));
    }
    let dim = cfg.dim();
    if let Some(truth) = truth {
        if truth.len() != cfg.steps_per_pass + 1 {
            return Err(Error::GridMismatch(format!(
                "truth trajectory has {} samples, expected {}",
                truth.len(),
                cfg.steps_per_pass + 1
            )));
        }
        if truth[0].nrows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: truth[0].nrows(),
            });
        }
    }
    let model = Model::new(cfg)?;
    let mut noise_rng = stream_rng(cfg.rng_seed, Stream::FieldNoise);
    let table = field
        .sample_grid(cfg.steps_per_pass)
        .with_noise(cfg.noise_field * field.b0(), &mut noise_rng);
    let ctx = PassContext {
        model: &model,
        cfg,
        record,
        table: &table,
        truth,
    };

    let start = match &opts.initial_estimate {
        Some(m) => DensityMatrix::new(m.clone())?.into_matrix(),
        None => DensityMatrix::maximally_mixed(dim).into_matrix(),
    };
    if start.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: start.nrows(),
        });
    }

    let mut estimates = vec![start.clone()];
    let mut passes = Vec::with_capacity(2 * opts.n_iterations);
    let mut weighted_residuals = Vec::new();
    let mut surrogate_residuals = Vec::new();
    let mut trace_drift: f64 = 0.0;
    let mut hermitian_drift: f64 = 0.0;
    let mut early_stopped = false;
    let mut rho = start;

    for k in 0..opts.n_iterations {
        let fwd = run_pass(&ctx, &rho, k, Direction::Forward)?;
        let bwd = run_pass(&ctx, &fwd.end, k, Direction::Backward)?;
        trace_drift = trace_drift.max(fwd.trace_drift).max(bwd.trace_drift);
        hermitian_drift = hermitian_drift.max(fwd.hermitian_drift).max(bwd.hermitian_drift);

        let surrogate = 2.0
            * cfg.gamma_small
            * (weighted_square_integral(cfg, &fwd.trace, &fwd.trace.innovation)
                + weighted_square_integral(cfg, &bwd.trace, &bwd.trace.innovation));
        surrogate_residuals.push(surrogate);
        if truth.is_some() {
            weighted_residuals.push(
                2.0 * cfg.gamma_small
                    * (weighted_square_integral(cfg, &fwd.trace, &fwd.trace.z)
                        + weighted_square_integral(cfg, &bwd.trace, &bwd.trace.z)),
            );
        }
        rho = bwd.end;
        estimates.push(rho.clone());
        passes.push(fwd.trace);
        passes.push(bwd.trace);
        log::debug!("iteration {k}: surrogate residual {surrogate:e}");
        if opts.early_stop.is_some_and(|thr| surrogate < thr) {
            early_stopped = k + 1 < opts.n_iterations;
            break;
        }
    }

    let min_eigenvalues: Vec<f64> = estimates.iter().map(qops::min_eigenvalue).collect();
    let vk_sequence = match truth {
        Some(truth) => estimates
            .iter()
            .map(|e| qops::lyapunov_v_unchecked(&(e - &truth[0])))
            .collect(),
        None => Vec::new(),
    };
    let final_raw = estimates.last().cloned().expect("at least the initial estimate");
    let (final_estimate, _) = DensityMatrix::new(qops::hermitian_part(&final_raw))?.project_psd();
    let fidelity_vs_truth = match truth {
        Some(truth) => Some(qops::fidelity(&final_estimate, &DensityMatrix::new(truth[0].clone())?)?),
        None => None,
    };
    if let Some(&min) = min_eigenvalues.last() {
        if min < 0.0 {
            log::info!("final raw estimate has minimum eigenvalue {min:e}; projected onto the PSD cone");
        }
    }
    Ok(BfnRun {
        config: cfg.clone(),
        iterations: estimates.len() - 1,
        early_stopped,
        estimates,
        min_eigenvalues,
        vk_sequence,
        weighted_residuals,
        surrogate_residuals,
        passes,
        final_raw,
        final_estimate,
        fidelity_vs_truth,
        max_trace_drift: trace_drift,
        max_hermitian_drift: hermitian_drift,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Discrete and continuous Lyapunov identities of a two-level run.
#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    /// `V_{k+1} - V_k` per iteration.
    pub decrements: Vec<f64>,
    /// `-2 gamma * integral of g Z^2` per iteration.
    pub predicted: Vec<f64>,
    pub decrement_rel_errors: Vec<f64>,
    pub max_decrement_rel_error: f64,
    pub strictly_decreasing: bool,
    /// Smallest `g` over all nodes (must be at least 1).
    pub g_min: f64,
    /// `|g_forward(T) - g_backward(0)|` at the turning point.
    pub g_turning_gap: f64,
    pub g_turning_value: f64,
    /// Max relative error of finite-difference `dV/dt` against
    /// `-4 Gamma V - 2 gamma Z^2` on forward passes.
    pub forward_identity_max_rel: f64,
    /// Same against `+4 Gamma V - 2 gamma Z^2` on backward passes.
    pub backward_identity_max_rel: f64,
    /// `max |V(rho_tilde(2kT + u)) - ...|`: true if every node of a round
    /// trip stays at or below the value at its start.
    pub envelope_holds: bool,
}

/// Checks the Lyapunov machinery on a run made with the truth trajectory.
///
/// Relative errors of the continuous identities are measured against the
/// scale `4 Gamma V + 2 gamma Z^2`, which stays positive where the backward
/// right-hand side changes sign.
pub fn lyapunov_diagnostics(run: &BfnRun) -> Result<LyapunovReport> {
    let cfg = &run.config;
    if !run.has_truth() {
        return Err(Error::MissingTruth);
    }
    if !cfg.spin.is_two_level() {
        return Err(Error::Unsupported(
            "the Lyapunov identities hold for the two-level observers only".into(),
        ));
    }
    let (gb, gs, horizon) = (cfg.gamma_big, cfg.gamma_small, cfg.t_horizon);

    let decrements: Vec<f64> = run.vk_sequence.windows(2).map(|w| w[1] - w[0]).collect();
    let predicted: Vec<f64> = run.weighted_residuals.iter().map(|w| -w).collect();
    let decrement_rel_errors: Vec<f64> = decrements
        .iter()
        .zip(&predicted)
        .map(|(d, p)| {
            let scale = d.abs().max(p.abs());
            if scale == 0.0 {
                0.0
            } else {
                (d - p).abs() / scale
            }
        })
        .collect();
    let max_decrement_rel_error = decrement_rel_errors.iter().cloned().fold(0.0, f64::max);
    let strictly_decreasing = decrements.iter().all(|&d| d < 0.0);

    let mut g_min = f64::INFINITY;
    let mut forward_max: f64 = 0.0;
    let mut backward_max: f64 = 0.0;
    for pass in &run.passes {
        for i in 0..pass.len() {
            g_min = g_min.min(g_weight(gb, horizon, i as f64 * pass.dt, pass.direction));
        }
        let worst = identity_max_rel(pass, gb, gs);
        match pass.direction {
            Direction::Forward => forward_max = forward_max.max(worst),
            Direction::Backward => backward_max = backward_max.max(worst),
        }
    }
    let g_end = g_weight(gb, horizon, horizon, Direction::Forward);
    let g_start = g_weight(gb, horizon, 0.0, Direction::Backward);

    let mut envelope_holds = true;
    for pair in run.passes.chunks(2) {
        let v0 = pair[0].v[0];
        let slack = 1e-12 * v0.max(1e-300);
        envelope_holds &= pair.iter().all(|p| p.v.iter().all(|&v| v <= v0 + slack));
    }

    Ok(LyapunovReport {
        decrements,
        predicted,
        decrement_rel_errors,
        max_decrement_rel_error,
        strictly_decreasing,
        g_min,
        g_turning_gap: (g_end - g_start).abs(),
        g_turning_value: g_end,
        forward_identity_max_rel: forward_max,
        backward_identity_max_rel: backward_max,
        envelope_holds,
    })
}

fn identity_max_rel(pass: &PassTrace, gamma_big: f64, gamma_small: f64) -> f64 {
    let sign = match pass.direction {
        Direction::Forward => -1.0,
        Direction::Backward => 1.0,
    };
    let mut worst: f64 = 0.0;
    for j in 1..pass.v.len().saturating_sub(1) {
        let fd = (pass.v[j + 1] - pass.v[j - 1]) / (2.0 * pass.dt);
        let (v, z) = (pass.v[j], pass.z[j]);
        let rhs = sign * 4.0 * gamma_big * v - 2.0 * gamma_small * z * z;
        let scale = 4.0 * gamma_big * v + 2.0 * gamma_small * z * z;
        if scale > 0.0 {
            worst = worst.max((fd - rhs).abs() / scale);
        }
    }
    worst
}

/// Quantities at the start `2kT` of each forward pass whose convergence to
/// zero makes up the two-level convergence argument.
#[derive(Debug, Clone, Serialize)]
pub struct ProofChainRow {
    pub k: usize,
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// One-sided estimate of `Z'(2kT+)`.
    pub z_dot: f64,
    /// One-sided estimate of `Z''(2kT+)`.
    pub z_ddot: f64,
    /// `B_x(0) Y - B_y(0) X`.
    pub field_combination: f64,
    /// `B_x'(0) Y - B_y'(0) X`.
    pub rate_combination: f64,
    /// `|X^2 + Y^2 + Z^2 - 2V|` (zero for traceless 2x2 errors).
    pub bloch_gap: f64,
}

/// Error-trajectory checkpoints per iteration of a two-level run with truth.
///
/// Derivatives use the first three nodes of each forward pass, since `Z` is
/// only piecewise smooth across pass boundaries.
pub fn proof_chain(run: &BfnRun, field: &ControlField) -> Result<Vec<ProofChainRow>> {
    if !run.has_truth() {
        return Err(Error::MissingTruth);
    }
    if !run.config.spin.is_two_level() {
        return Err(Error::Unsupported("proof-chain quantities are defined for two-level runs".into()));
    }
    let (bx, by) = field.field_at(0.0, Direction::Forward)?;
    let (dbx, dby) = field.field_rate_at(0.0)?;
    let mut rows = Vec::new();
    for pass in run.passes.iter().filter(|p| p.direction == Direction::Forward) {
        if pass.len() < 3 {
            return Err(Error::InvalidConfig("need at least three nodes per pass".into()));
        }
        let (z0, z1, z2) = (pass.z[0], pass.z[1], pass.z[2]);
        let dt = pass.dt;
        let (x, y) = (pass.x[0], pass.y[0]);
        rows.push(ProofChainRow {
            k: pass.iteration,
            v: pass.v[0],
            x,
            y,
            z: z0,
            z_dot: (-3.0 * z0 + 4.0 * z1 - z2) / (2.0 * dt),
            z_ddot: (z0 - 2.0 * z1 + z2) / (dt * dt),
            field_combination: bx * y - by * x,
            rate_combination: dbx * y - dby * x,
            bloch_gap: (x * x + y * y + z0 * z0 - 2.0 * pass.v[0]).abs(),
        });
    }
    Ok(rows)
}
