//! Independent reconstruction of the initial state by linear least squares.
//!
//! The master equation is linear in the state, so the record is an affine
//! function of the initial state's coordinates in a traceless Hermitian
//! basis. Simulating one perturbed initial condition per basis element
//! gives that map column by column.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::controls::ControlField;
use crate::dynamics::{simulate_from, MeasurementRecord, PhysicsConfig};
use crate::error::{Error, Result};
use crate::qops::{self, CMatrix, DensityMatrix};
use crate::tol;

pub const DEFAULT_EPSILON: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct LinearResponse {
    /// `(N + 1) x (d^2 - 1)` sensitivities of the record to each basis
    /// coefficient.
    pub matrix: DMatrix<f64>,
    /// Record of the maximally mixed initial state.
    pub baseline: Vec<f64>,
    pub basis: Vec<CMatrix>,
    pub singular_values: Vec<f64>,
}

impl LinearResponse {
    pub fn dim(&self) -> usize {
        self.basis[0].nrows()
    }

    /// Numerical rank with threshold `RANK_REL * sigma_max`.
    pub fn rank(&self) -> usize {
        let top = self.singular_values.iter().cloned().fold(0.0, f64::max);
        self.singular_values.iter().filter(|&&s| s > tol::RANK_REL * top).count()
    }

    pub fn condition_number(&self) -> f64 {
        let top = self.singular_values.iter().cloned().fold(0.0, f64::max);
        let bottom = self.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
        if bottom > 0.0 {
            top / bottom
        } else {
            f64::INFINITY
        }
    }

    /// Writes `t,baseline,col_0,...` rows.
    pub fn write_csv<W: Write>(&self, writer: W, times: &[f64]) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string(), "baseline".to_string()];
        header.extend((0..self.matrix.ncols()).map(|j| format!("col_{j}")));
        out.write_record(&header)?;
        for (i, t) in times.iter().enumerate() {
            let mut row = vec![t.to_string(), self.baseline[i].to_string()];
            row.extend(self.matrix.row(i).iter().map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn build_response(field: &ControlField, cfg: &PhysicsConfig) -> Result<LinearResponse> {
    build_response_with_epsilon(field, cfg, DEFAULT_EPSILON)
}

/// Builds the response from the records of `Id/d` and `Id/d + eps E_j`.
pub fn build_response_with_epsilon(field: &ControlField, cfg: &PhysicsConfig, eps: f64) -> Result<LinearResponse> {
    let dim = cfg.dim();
    let basis = qops::gell_mann_basis(dim);
    let mixed = DensityMatrix::maximally_mixed(dim).into_matrix();
    let baseline = simulate_from(&mixed, field, cfg)?.record.clean_values;
    let columns: Vec<Vec<f64>> = basis
        .par_iter()
        .map(|e| {
            let start = &mixed + e * Complex64::new(eps, 0.0);
            let rec = simulate_from(&start, field, cfg)?.record.clean_values;
            Ok(rec.iter().zip(&baseline).map(|(r, b)| (r - b) / eps).collect())
        })
        .collect::<Result<_>>()?;
    let rows = baseline.len();
    let matrix = DMatrix::from_fn(rows, basis.len(), |i, j| columns[j][i]);
    let singular_values = matrix.singular_values().iter().cloned().collect();
    Ok(LinearResponse {
        matrix,
        baseline,
        basis,
        singular_values,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleEstimate {
    #[serde(skip)]
    pub estimate: DensityMatrix,
    #[serde(skip)]
    pub raw: CMatrix,
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub condition_number: f64,
    pub rank: usize,
    pub min_eigenvalue: f64,
}

/// Least-squares fit of the record; fails when the response is rank
/// deficient, i.e. the control does not make the record informationally
/// complete.
pub fn reconstruct(record: &MeasurementRecord, response: &LinearResponse) -> Result<OracleEstimate> {
    if record.values.len() != response.baseline.len() {
        return Err(Error::GridMismatch(format!(
            "record has {} samples, response has {} rows",
            record.values.len(),
            response.baseline.len()
        )));
    }
    let expected = response.basis.len();
    let rank = response.rank();
    if rank < expected {
        return Err(Error::Unobservable { rank, expected });
    }
    let rhs = DVector::from_iterator(
        record.values.len(),
        record.values.iter().zip(&response.baseline).map(|(y, b)| y - b),
    );
    let svd = response.matrix.clone().svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let coeffs = svd
        .solve(&rhs, tol::SVD_CUTOFF_REL * top)
        .map_err(|e| Error::InvalidConfig(format!("least-squares solve failed: {e}")))?;
    let residual_norm = (&response.matrix * &coeffs - &rhs).norm();

    let dim = response.dim();
    let mut raw = DensityMatrix::maximally_mixed(dim).into_matrix();
    for (c, e) in coeffs.iter().zip(&response.basis) {
        raw += e * Complex64::new(*c, 0.0);
    }
    let raw = qops::hermitian_part(&raw);
    let (estimate, min_eigenvalue) = DensityMatrix::new(raw.clone())?.project_psd();
    Ok(OracleEstimate {
        estimate,
        raw,
        coefficients: coeffs.iter().cloned().collect(),
        residual_norm,
        condition_number: response.condition_number(),
        rank,
        min_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controls::sample_random_field;
    use crate::dynamics::simulate_truth;
    use crate::qops::{bloch_compose, BlochVector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> PhysicsConfig {
        PhysicsConfig {
            steps_per_pass: 1000,
            ..PhysicsConfig::paper_two_level()
        }
    }

    #[test]
    fn dephasing_only_keeps_the_z_column_constant() {
        let cfg = cfg();
        let still = ControlField::from_knots(0.0, 1.0, &[0.0; 10]).unwrap();
        let resp = build_response(&still, &cfg).unwrap();
        let z_col = resp.matrix.column(2);
        let expected = std::f64::consts::SQRT_2;
        assert!(z_col.iter().all(|v| (v - expected).abs() < 1e-10));
        assert!(resp.matrix.column(0).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn response_is_independent_of_epsilon() {
        let cfg = cfg();
        let field = sample_random_field(&cfg, 5).unwrap();
        let a = build_response_with_epsilon(&field, &cfg, 1e-3).unwrap();
        let b = build_response_with_epsilon(&field, &cfg, 1e-2).unwrap();
        let gap = (&a.matrix - &b.matrix).amax();
        assert!(gap < 1e-8, "gap {gap:e}");
        assert_eq!(a.rank(), 3);
    }

    #[test]
    fn reconstructs_noiseless_pure_states() {
        let cfg = cfg();
        let field = sample_random_field(&cfg, 8).unwrap();
        let resp = build_response(&field, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let rho0 = DensityMatrix::random_pure(2, &mut rng);
            let truth = simulate_truth(&rho0, &field, &cfg).unwrap();
            let est = reconstruct(&truth.record, &resp).unwrap();
            assert!(qops::frobenius_distance(est.estimate.matrix(), rho0.matrix()) < 1e-6);
            assert!(est.residual_norm < 1e-9);
        }
        let mixed = simulate_truth(&DensityMatrix::maximally_mixed(2), &field, &cfg).unwrap();
        let est = reconstruct(&mixed.record, &resp).unwrap();
        assert!(est.coefficients.iter().all(|c| c.abs() < 1e-10));
    }

    #[test]
    fn constant_phase_is_unobservable() {
        let cfg = cfg();
        let fixed = ControlField::from_knots(10.0, 1.0, &[1.1; 10]).unwrap();
        let resp = build_response(&fixed, &cfg).unwrap();
        assert!(resp.rank() < 3);
        let rho0 = DensityMatrix::state(bloch_compose(BlochVector::new(0.6, 0.0, 0.8), 1.0)).unwrap();
        let truth = simulate_truth(&rho0, &fixed, &cfg).unwrap();
        assert!(matches!(
            reconstruct(&truth.record, &resp),
            Err(Error::Unobservable { rank: 2, expected: 3 })
        ));
    }

    #[test]
    fn spin_one_response_has_full_rank() {
        let cfg = PhysicsConfig {
            steps_per_pass: 1000,
            ..PhysicsConfig::paper_spin_one()
        };
        let field = sample_random_field(&cfg, 1).unwrap();
        let resp = build_response(&field, &cfg).unwrap();
        assert_eq!(resp.matrix.ncols(), 8);
        assert_eq!(resp.rank(), 8);
    }

    #[test]
    fn response_csv_layout() {
        let cfg = PhysicsConfig {
            steps_per_pass: 10,
            ..PhysicsConfig::paper_two_level()
        };
        let field = sample_random_field(&cfg, 1).unwrap();
        let resp = build_response(&field, &cfg).unwrap();
        let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let mut buf = Vec::new();
        resp.write_csv(&mut buf, &times).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,baseline,col_0,col_1,col_2\n"));
        assert_eq!(text.lines().count(), 12);
    }
}
