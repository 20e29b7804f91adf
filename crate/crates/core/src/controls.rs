//! Control fields `B_x(t) = B0 cos(theta(t))`, `B_y(t) = B0 sin(theta(t))`
//! with `theta` a natural cubic spline through random knot phases.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Direction, PhysicsConfig};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::tol;

/// Natural cubic spline (zero second derivative at both ends).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalCubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    second: Vec<f64>,
}

impl NaturalCubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 4 {
            return Err(Error::TooFewKnots(n));
        }
        if values.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: values.len(),
            });
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "spline knots must be finite and strictly increasing".into(),
            ));
        }

        // Thomas algorithm on the interior second derivatives.
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let m = n - 2;
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            upper[i] = h[i + 1];
            rhs[i] = 6.0
                * ((values[i + 2] - values[i + 1]) / h[i + 1] - (values[i + 1] - values[i]) / h[i]);
        }
        for i in 1..m {
            let w = h[i] / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut second = vec![0.0; n];
        for i in (0..m).rev() {
            let next = if i + 1 < m { second[i + 2] } else { 0.0 };
            second[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
        }
        Ok(NaturalCubicSpline {
            knots,
            values,
            second,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.second
    }

    fn interval(&self, t: f64) -> usize {
        let last = self.knots.len() - 2;
        match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(last),
            Err(0) => 0,
            Err(i) => (i - 1).min(last),
        }
    }

    /// Value, first and second derivative at `t` (extrapolates linearly in
    /// the cubic of the end interval outside the knot range).
    pub fn eval_all(&self, t: f64) -> (f64, f64, f64) {
        let i = self.interval(t);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let h = x1 - x0;
        let a = (x1 - t) / h;
        let b = (t - x0) / h;
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let curvature = a * m0 + b * m1;
        (value, slope, curvature)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_all(t).0
    }
}

/// Cubic spline through phases sampled at equally spaced times covering
/// `[0, t_horizon]` (both endpoints included).
pub fn synthesize_phase(knot_phases: &[f64], t_horizon: f64) -> Result<NaturalCubicSpline> {
    if knot_phases.len() < 4 {
        return Err(Error::TooFewKnots(knot_phases.len()));
    }
    if !(t_horizon > 0.0) {
        return Err(Error::InvalidConfig("horizon must be positive".into()));
    }
    let intervals = (knot_phases.len() - 1) as f64;
    let times = (0..knot_phases.len())
        .map(|j| t_horizon * j as f64 / intervals)
        .collect();
    NaturalCubicSpline::new(times, knot_phases.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    b0: f64,
    t_horizon: f64,
    phase: NaturalCubicSpline,
}

impl ControlField {
    /// Field with the phase spline through uniformly spaced knots.
    pub fn from_knots(b0: f64, t_horizon: f64, knot_phases: &[f64]) -> Result<Self> {
        Ok(ControlField {
            b0,
            t_horizon,
            phase: synthesize_phase(knot_phases, t_horizon)?,
        })
    }

    /// Field from an externally supplied `(t, theta)` table, e.g. an
    /// optimized control. The table must start at 0 and end at the horizon.
    pub fn from_table(b0: f64, times: Vec<f64>, thetas: Vec<f64>) -> Result<Self> {
        let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
            return Err(Error::TooFewKnots(0));
        };
        if first.abs() > 1e-12 {
            return Err(Error::InvalidConfig("control table must start at t = 0".into()));
        }
        Ok(ControlField {
            b0,
            t_horizon: last,
            phase: NaturalCubicSpline::new(times, thetas)?,
        })
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn t_horizon(&self) -> f64 {
        self.t_horizon
    }

    pub fn knot_times(&self) -> &[f64] {
        self.phase.knots()
    }

    pub fn knot_phases(&self) -> &[f64] {
        self.phase.values()
    }

    pub fn phase(&self) -> &NaturalCubicSpline {
        &self.phase
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.t_horizon;
        if !(t >= -slack && t <= self.t_horizon + slack) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.t_horizon,
            });
        }
        Ok(())
    }

    /// `(theta, theta', theta'')` at `t`.
    pub fn theta(&self, t: f64) -> Result<(f64, f64, f64)> {
        self.check_time(t)?;
        Ok(self.phase.eval_all(t))
    }

    /// `(B_x, B_y)` at local time `t`; the backward direction reads the
    /// field at `T - t`.
    pub fn field_at(&self, t: f64, direction: Direction) -> Result<(f64, f64)> {
        self.check_time(t)?;
        let s = match direction {
            Direction::Forward => t,
            Direction::Backward => self.t_horizon - t,
        };
        Ok(self.field_unchecked(s))
    }

    pub(crate) fn field_unchecked(&self, t: f64) -> (f64, f64) {
        let theta = self.phase.eval(t);
        (self.b0 * theta.cos(), self.b0 * theta.sin())
    }

    /// `(dB_x/dt, dB_y/dt)` at `t` (forward time).
    pub fn field_rate_at(&self, t: f64) -> Result<(f64, f64)> {
        let (theta, rate, _) = self.theta(t)?;
        Ok((-self.b0 * theta.sin() * rate, self.b0 * theta.cos() * rate))
    }

    /// Samples the field on the `steps + 1` uniform grid nodes.
    pub fn sample_grid(&self, steps: usize) -> FieldTable {
        let dt = self.t_horizon / steps as f64;
        let (bx, by) = (0..=steps).map(|i| self.field_unchecked(i as f64 * dt)).unzip();
        FieldTable { dt, bx, by }
    }

    /// Writes `t,theta,bx,by` rows on `samples + 1` uniform times.
    pub fn write_csv<W: Write>(&self, writer: W, samples: usize) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["t", "theta", "bx", "by"])?;
        for i in 0..=samples {
            let t = self.t_horizon * i as f64 / samples as f64;
            let theta = self.phase.eval(t);
            let (bx, by) = self.field_unchecked(t);
            out.serialize((t, theta, bx, by))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a `t,theta[,bx,by]` table and rebuilds the field by
    /// interpolating `theta`. Extra columns are ignored.
    pub fn read_csv<R: Read>(reader: R, b0: f64) -> Result<Self> {
        let mut input = csv::Reader::from_reader(reader);
        let headers = input.headers()?.clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::InvalidConfig(format!("control CSV lacks a '{name}' column")))
        };
        let (ti, thi) = (column("t")?, column("theta")?);
        let mut times = Vec::new();
        let mut thetas = Vec::new();
        for row in input.records() {
            let row = row?;
            let parse = |i: usize| {
                row.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("bad control CSV row {row:?}")))
            };
            times.push(parse(ti)?);
            thetas.push(parse(thi)?);
        }
        Self::from_table(b0, times, thetas)
    }
}

/// Field values frozen on the integration grid. The observer reads its
/// controls from here, which is where control noise enters.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    dt: f64,
    bx: Vec<f64>,
    by: Vec<f64>,
}

impl FieldTable {
    pub fn len(&self) -> usize {
        self.bx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bx.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Node `i` in the given direction; backward reads node `N - i`.
    pub fn at(&self, node: usize, direction: Direction) -> (f64, f64) {
        let j = match direction {
            Direction::Forward => node,
            Direction::Backward => self.bx.len() - 1 - node,
        };
        (self.bx[j], self.by[j])
    }

    /// Adds i.i.d. Gaussian noise of standard deviation `sigma` to both
    /// components at every node.
    pub fn with_noise<R: Rng + ?Sized>(mut self, sigma: f64, rng: &mut R) -> Self {
        if sigma > 0.0 {
            for (x, y) in self.bx.iter_mut().zip(self.by.iter_mut()) {
                *x += sigma * rng.sample::<f64, _>(StandardNormal);
                *y += sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        self
    }
}

/// `B_x(0) B_y'(0) - B_y(0) B_x'(0)`, which must be nonzero for the
/// two-level convergence guarantee. Equals `B0^2 theta'(0)`.
pub fn check_theorem_precondition(field: &ControlField) -> f64 {
    let (bx, by) = field.field_unchecked(0.0);
    let (_, rate, _) = field.phase.eval_all(0.0);
    let (dbx, dby) = (-by * rate, bx * rate);
    bx * dby - by * dbx
}

pub fn precondition_holds(field: &ControlField) -> bool {
    check_theorem_precondition(field).abs() >= tol::PRECONDITION_REL * field.b0 * field.b0
}

/// Draws `cfg.n_knots` uniform phases in `[0, 2 pi)` and splines them,
/// redrawing until the observability precondition holds.
pub fn sample_random_field(cfg: &PhysicsConfig, seed: u64) -> Result<ControlField> {
    let mut rng = stream_rng(seed, Stream::Control);
    for _ in 0..tol::PRECONDITION_MAX_DRAWS {
        let phases: Vec<f64> = (0..cfg.n_knots).map(|_| rng.random_range(0.0..TAU)).collect();
        let field = ControlField::from_knots(cfg.b0, cfg.t_horizon, &phases)?;
        if precondition_holds(&field) {
            return Ok(field);
        }
        log::debug!("control draw violates the observability precondition; redrawing");
    }
    Err(Error::PreconditionExhausted {
        attempts: tol::PRECONDITION_MAX_DRAWS,
    })
}
