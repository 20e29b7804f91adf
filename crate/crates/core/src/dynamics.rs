//! Lindblad generators for the measured spin ensemble, a fixed-step RK4
//! integrator, and generation of the measurement record.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::controls::ControlField;
use crate::error::{Error, Result};
use crate::qops::{self, angular_momentum, pauli, Axis, CMatrix, DensityMatrix, Spin};
use crate::rng::{stream_rng, Stream};

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// Coefficients `c` of the output-injection term `c * O * (y_hat - y)` in
/// the forward and backward observers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionGains {
    pub forward: f64,
    pub backward: f64,
}

/// Every scalar parameter of an experiment.
///
/// For spin-1/2 the Hamiltonian is `B_x sx + B_y sy` and `g_f`, `mu_b` and
/// `beta` are unused. For larger spins `b0` is the effective amplitude
/// (the product `mu_B B0`) and the Hamiltonian is
/// `g_F mu_B (B_x F_x + B_y F_y) + beta Gamma F_x^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub spin: Spin,
    /// Measurement strength Gamma.
    pub gamma_big: f64,
    /// Observer gain gamma.
    pub gamma_small: f64,
    pub b0: f64,
    pub t_horizon: f64,
    pub g_f: f64,
    pub mu_b: f64,
    pub beta: f64,
    /// Record intervals per pass; even so the reflection `t -> T - t` maps
    /// grid nodes onto grid nodes.
    pub steps_per_pass: usize,
    /// Number of phase knots, endpoints included.
    pub n_knots: usize,
    pub noise_meas: f64,
    pub noise_field: f64,
    pub rng_seed: u64,
    /// Overrides the injection gains written into the observer equations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionGains>,
}

impl PhysicsConfig {
    /// Spin-1/2 ensemble: Gamma = gamma = 0.25 kHz, B0 = 10 kHz, T = 1 ms.
    pub fn paper_two_level() -> Self {
        PhysicsConfig {
            spin: Spin::HALF,
            gamma_big: 0.25,
            gamma_small: 0.25,
            b0: 10.0,
            t_horizon: 1.0,
            g_f: 1.0,
            mu_b: 1.0,
            beta: 0.0,
            steps_per_pass: 2000,
            n_knots: 10,
            noise_meas: 0.0,
            noise_field: 0.0,
            rng_seed: 0,
            injection: None,
        }
    }

    /// Spin-1 ensemble: g_F = 1, mu_B B0 = 30, Gamma = gamma = 1, beta = 10, T = 1.
    pub fn paper_spin_one() -> Self {
        PhysicsConfig {
            spin: Spin::ONE,
            gamma_big: 1.0,
            gamma_small: 1.0,
            b0: 30.0,
            t_horizon: 1.0,
            g_f: 1.0,
            mu_b: 1.0,
            beta: 10.0,
            ..Self::paper_two_level()
        }
    }

    pub fn with_noise(mut self, meas: f64, field: f64) -> Self {
        self.noise_meas = meas;
        self.noise_field = field;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma_big", self.gamma_big),
            ("gamma_small", self.gamma_small),
            ("t_horizon", self.t_horizon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("b0", self.b0),
            ("g_f", self.g_f),
            ("mu_b", self.mu_b),
            ("beta", self.beta),
            ("noise_meas", self.noise_meas),
            ("noise_field", self.noise_field),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.steps_per_pass < 2 || !self.steps_per_pass.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "steps_per_pass must be even and >= 2, got {}",
                self.steps_per_pass
            )));
        }
        if self.n_knots < 4 {
            return Err(Error::TooFewKnots(self.n_knots));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    /// Record spacing `T / N`.
    pub fn dt(&self) -> f64 {
        self.t_horizon / self.steps_per_pass as f64
    }

    pub fn gains(&self) -> InjectionGains {
        if let Some(g) = self.injection {
            return g;
        }
        if self.spin.is_two_level() {
            InjectionGains {
                forward: -(self.gamma_big + self.gamma_small),
                backward: self.gamma_big - self.gamma_small,
            }
        } else {
            InjectionGains {
                forward: -self.gamma_small,
                backward: -self.gamma_small,
            }
        }
    }
}

/// Operators of one configuration, built once and reused by every
/// right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct Model {
    dim: usize,
    rate: f64,
    field_x: CMatrix,
    field_y: CMatrix,
    drift: CMatrix,
    jump: CMatrix,
    jump_sq: CMatrix,
    observable: CMatrix,
    gains: InjectionGains,
}

impl Model {
    pub fn new(cfg: &PhysicsConfig) -> Result<Self> {
        cfg.validate()?;
        let dim = cfg.dim();
        let (field_x, field_y, drift, observable) = if cfg.spin.is_two_level() {
            (pauli(Axis::X), pauli(Axis::Y), qops::zeros(2), pauli(Axis::Z))
        } else {
            let scale = Complex64::new(cfg.g_f * cfg.mu_b, 0.0);
            let fx = angular_momentum(cfg.spin, Axis::X);
            let fy = angular_momentum(cfg.spin, Axis::Y);
            let fz = angular_momentum(cfg.spin, Axis::Z);
            let drift = &fx * &fx * Complex64::new(cfg.beta * cfg.gamma_big, 0.0);
            let obs = fz * Complex64::new(cfg.gamma_big.sqrt(), 0.0);
            (fx * scale, fy * scale, drift, obs)
        };
        let jump = observable.clone();
        let jump_sq = jump.adjoint() * &jump;
        Ok(Model {
            dim,
            rate: cfg.gamma_big,
            field_x,
            field_y,
            drift,
            jump,
            jump_sq,
            observable,
            gains: cfg.gains(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The measured observable: `sz` for spin-1/2, `sqrt(Gamma) F_z` otherwise.
    pub fn observable(&self) -> &CMatrix {
        &self.observable
    }

    pub fn jump(&self) -> &CMatrix {
        &self.jump
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn gains(&self) -> InjectionGains {
        self.gains
    }

    pub fn hamiltonian(&self, bx: f64, by: f64) -> CMatrix {
        &self.drift + &self.field_x * Complex64::new(bx, 0.0) + &self.field_y * Complex64::new(by, 0.0)
    }

    /// Lindblad generator with the model's own jump operator.
    pub fn generator(&self, state: &CMatrix, bx: f64, by: f64, direction: Direction) -> CMatrix {
        let h = self.hamiltonian(bx, by);
        generator_with_jump_sq(state, &h, &self.jump, &self.jump_sq, self.rate, direction)
    }

    /// Observer right-hand side: generator plus output injection
    /// `c * O * (tr(O rho_hat) - y)` with the direction's gain `c`.
    pub fn observer_rhs(&self, rho_hat: &CMatrix, bx: f64, by: f64, y: f64, direction: Direction) -> CMatrix {
        let mut out = self.generator(rho_hat, bx, by, direction);
        let gain = match direction {
            Direction::Forward => self.gains.forward,
            Direction::Backward => self.gains.backward,
        };
        let innovation = qops::trace_product_re(&self.observable, rho_hat) - y;
        out += &self.observable * Complex64::new(gain * innovation, 0.0);
        out
    }
}

fn generator_with_jump_sq(
    state: &CMatrix,
    hamiltonian: &CMatrix,
    jump: &CMatrix,
    jump_sq: &CMatrix,
    rate: f64,
    direction: Direction,
) -> CMatrix {
    let coherent = (hamiltonian * state - state * hamiltonian) * MINUS_I;
    let dissipator = jump * state * jump.adjoint()
        - (jump_sq * state + state * jump_sq) * Complex64::new(0.5, 0.0);
    (coherent + dissipator * Complex64::new(rate, 0.0)) * Complex64::new(direction.sign(), 0.0)
}

/// `-i[H, rho] + rate D[L] rho` forward, and its negative backward, with
/// `D[L] rho = L rho L† - (L†L rho + rho L†L) / 2`.
pub fn lindblad_rhs(
    state: &CMatrix,
    hamiltonian: &CMatrix,
    jump: &CMatrix,
    rate: f64,
    direction: Direction,
) -> Result<CMatrix> {
    let d = state.nrows();
    for m in [state, hamiltonian, jump] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.nrows(),
            });
        }
    }
    let jump_sq = jump.adjoint() * jump;
    Ok(generator_with_jump_sq(state, hamiltonian, jump, &jump_sq, rate, direction))
}

/// Hamiltonian at forward time `t`.
pub fn hamiltonian_at(t: f64, field: &ControlField, cfg: &PhysicsConfig) -> Result<CMatrix> {
    let (bx, by) = field.field_at(t, Direction::Forward)?;
    Ok(Model::new(cfg)?.hamiltonian(bx, by))
}

/// State types the RK4 stepper can advance.
pub trait OdeState: Clone {
    /// `self + c * k`
    fn add_scaled(&self, k: &Self, c: f64) -> Self;
    fn all_finite(&self) -> bool;
    /// Applied to the updated state after each step.
    fn finish(self) -> Self {
        self
    }
}

impl OdeState for f64 {
    fn add_scaled(&self, k: &Self, c: f64) -> Self {
        self + c * k
    }

    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl OdeState for DMatrix<f64> {
    fn add_scaled(&self, k: &Self, c: f64) -> Self {
        self + k * c
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

/// Complex matrices are re-Hermitized after every step.
impl OdeState for CMatrix {
    fn add_scaled(&self, k: &Self, c: f64) -> Self {
        self + k * Complex64::new(c, 0.0)
    }

    fn all_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn finish(self) -> Self {
        qops::hermitian_part(&self)
    }
}

/// One classical fourth-order Runge–Kutta step of `x' = rhs(t, x)`.
pub fn rk4_step<S, F>(state: &S, t: f64, dt: f64, rhs: F) -> Result<S>
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    let next = rk4_unfinished(state, t, dt, rhs).finish();
    if !next.all_finite() {
        return Err(Error::NonFinite { t: t + dt });
    }
    Ok(next)
}

/// RK4 update without the [`OdeState::finish`] projection.
pub(crate) fn rk4_unfinished<S, F>(state: &S, t: f64, dt: f64, rhs: F) -> S
where
    S: OdeState,
    F: Fn(f64, &S) -> S,
{
    let half = 0.5 * dt;
    let k1 = rhs(t, state);
    let k2 = rhs(t + half, &state.add_scaled(&k1, half));
    let k3 = rhs(t + half, &state.add_scaled(&k2, half));
    let k4 = rhs(t + dt, &state.add_scaled(&k3, dt));
    state
        .add_scaled(&k1, dt / 6.0)
        .add_scaled(&k2, dt / 3.0)
        .add_scaled(&k3, dt / 3.0)
        .add_scaled(&k4, dt / 6.0)
}

/// Uniformly sampled measurement `y(t_i)` on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub clean_values: Vec<f64>,
}

impl MeasurementRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Checks the record is sampled on the configuration's grid.
    pub fn check_grid(&self, cfg: &PhysicsConfig) -> Result<()> {
        let n = cfg.steps_per_pass;
        if self.times.len() != n + 1 || self.values.len() != n + 1 || self.clean_values.len() != n + 1 {
            return Err(Error::GridMismatch(format!(
                "record has {} samples, configuration expects {}",
                self.times.len(),
                n + 1
            )));
        }
        let dt = cfg.dt();
        for (i, &t) in self.times.iter().enumerate() {
            if (t - i as f64 * dt).abs() > 1e-9 * cfg.t_horizon {
                return Err(Error::GridMismatch(format!(
                    "sample {i} at t = {t}, expected {}",
                    i as f64 * dt
                )));
            }
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::GridMismatch("record contains non-finite values".into()));
        }
        Ok(())
    }
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Adds i.i.d. Gaussian noise with standard deviation `level * RMS(clean)`.
pub fn add_noise(record: &MeasurementRecord, level: f64, seed: u64) -> MeasurementRecord {
    let mut rng = stream_rng(seed, Stream::MeasurementNoise);
    let sigma = level * rms(&record.clean_values);
    let values = record
        .clean_values
        .iter()
        .map(|&y| if sigma > 0.0 { y + sigma * rng.sample::<f64, _>(StandardNormal) } else { y })
        .collect();
    MeasurementRecord {
        times: record.times.clone(),
        values,
        clean_values: record.clean_values.clone(),
    }
}

/// True trajectory on the record grid together with its (noiseless) record.
#[derive(Debug, Clone)]
pub struct TruthRun {
    pub trajectory: Vec<CMatrix>,
    pub record: MeasurementRecord,
}

impl TruthRun {
    pub fn initial_state(&self) -> &CMatrix {
        &self.trajectory[0]
    }
}

/// Integrates the forward master equation from a physical state with the
/// clean control field, sampling the observable at every grid node.
pub fn simulate_truth(rho0: &DensityMatrix, field: &ControlField, cfg: &PhysicsConfig) -> Result<TruthRun> {
    if rho0.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: rho0.dim(),
        });
    }
    DensityMatrix::state(rho0.matrix().clone())?;
    simulate_from(rho0.matrix(), field, cfg)
}

/// Same as [`simulate_truth`] without requiring a positive initial
/// condition; the dynamics are linear so any Hermitian start is fine.
pub(crate) fn simulate_from(rho0: &CMatrix, field: &ControlField, cfg: &PhysicsConfig) -> Result<TruthRun> {
    let model = Model::new(cfg)?;
    let n = cfg.steps_per_pass;
    let dt = cfg.dt();
    let mut trajectory = Vec::with_capacity(n + 1);
    let mut rho = rho0.clone();
    trajectory.push(rho.clone());
    for i in 0..n {
        let t = i as f64 * dt;
        rho = rk4_step(&rho, t, dt, |s, r| {
            let (bx, by) = field.field_unchecked(s.min(cfg.t_horizon));
            model.generator(r, bx, by, Direction::Forward)
        })?;
        trajectory.push(rho.clone());
    }
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    let clean: Vec<f64> = trajectory
        .iter()
        .map(|r| qops::trace_product_re(model.observable(), r))
        .collect();
    Ok(TruthRun {
        trajectory,
        record: MeasurementRecord {
            times,
            values: clean.clone(),
            clean_values: clean,
        },
    })
}
