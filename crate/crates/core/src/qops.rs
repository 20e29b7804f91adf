//! Operator algebra on small dense complex matrices: spin operators,
//! Hermitian matrix functions, Bloch decomposition and the Uhlmann fidelity.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub type CMatrix = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Total angular momentum quantum number F, stored as 2F.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };
    pub const ONE: Spin = Spin { twice: 2 };

    pub fn new(f: f64) -> Result<Self> {
        let twice = 2.0 * f;
        if !twice.is_finite() || twice < 1.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpin(f));
        }
        let twice = twice.round() as u32;
        if twice > tol::MAX_TWICE_SPIN {
            return Err(Error::InvalidSpin(f));
        }
        Ok(Spin { twice })
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// Hilbert space dimension 2F + 1.
    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    pub fn is_two_level(self) -> bool {
        self.twice == 1
    }
}

impl TryFrom<f64> for Spin {
    type Error = Error;

    fn try_from(f: f64) -> Result<Self> {
        Spin::new(f)
    }
}

impl From<Spin> for f64 {
    fn from(s: Spin) -> f64 {
        s.value()
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMatrix {
    CMatrix::zeros(dim, dim)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn pauli(axis: Axis) -> CMatrix {
    let z = Complex64::new(0.0, 0.0);
    let one = c(1.0);
    match axis {
        Axis::X => CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        Axis::Y => CMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
        Axis::Z => CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    }
}

/// Spin-F angular momentum operator in the Condon–Shortley convention.
///
/// Basis order is `m = F, F-1, ..., -F`, so `F_z` is diagonal with
/// decreasing entries and the ladder matrix elements are real and
/// non-negative.
pub fn angular_momentum(spin: Spin, axis: Axis) -> CMatrix {
    let d = spin.dim();
    let f = spin.value();
    if axis == Axis::Z {
        return CMatrix::from_fn(d, d, |i, j| if i == j { c(f - i as f64) } else { c(0.0) });
    }
    // raising operator: <m+1|F+|m> at (row i-1, col i) where m = f - i
    let mut raise = zeros(d);
    for i in 1..d {
        let m = f - i as f64;
        raise[(i - 1, i)] = c((f * (f + 1.0) - m * (m + 1.0)).sqrt());
    }
    let lower = raise.adjoint();
    match axis {
        Axis::X => (&raise + &lower) * c(0.5),
        Axis::Y => (&raise - &lower) * Complex64::new(0.0, -0.5),
        Axis::Z => unreachable!(),
    }
}

fn check_same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok(())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_same_dim(a, b)?;
    Ok(a * b - b * a)
}

/// Real part of `tr(A B)` without forming the product.
pub(crate) fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let d = a.nrows();
    let mut acc = 0.0;
    for i in 0..d {
        for k in 0..d {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

#[cfg(test)]
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let d = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Expectation value `Re tr(observable · state)`.
pub fn expect(observable: &CMatrix, state: &CMatrix) -> Result<f64> {
    check_same_dim(observable, state)?;
    Ok(trace_product_re(observable, state))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max|M - M†|`.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMatrix) -> bool {
    m.is_square() && hermitian_asymmetry(m) <= tol::HERMITIAN_REL * max_abs(m).max(f64::MIN_POSITIVE)
}

fn ensure_hermitian(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFiniteMatrix);
    }
    if !is_hermitian(m) {
        return Err(Error::NotHermitian {
            asymmetry: hermitian_asymmetry(m),
        });
    }
    Ok(())
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

pub fn trace_re(m: &CMatrix) -> f64 {
    m.trace().re
}

pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

fn recompose(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(values.len(), values.iter().map(|&v| c(v))));
    vectors * diag * vectors.adjoint()
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0[0]
}

/// Principal square root of a positive semidefinite Hermitian matrix.
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let roots: Vec<f64> = values
        .iter()
        .map(|&v| if v < tol::EIGEN_CLAMP { 0.0 } else { v.sqrt() })
        .collect();
    recompose(&roots, &vectors)
}

/// Nearest trace-1 PSD matrix by eigenvalue clamping; also returns the
/// minimum eigenvalue before clamping.
pub fn psd_project(m: &CMatrix) -> (CMatrix, f64) {
    let (mut values, vectors) = hermitian_eigen(m);
    let min = values[0];
    for v in &mut values {
        *v = v.max(0.0);
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        let d = m.nrows();
        return (identity(d) * c(1.0 / d as f64), min);
    }
    for v in &mut values {
        *v /= total;
    }
    (recompose(&values, &vectors), min)
}

/// Hermitian, trace-1 matrix. Positivity is only enforced by
/// [`DensityMatrix::state`]; observer estimates may leave the PSD cone.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        ensure_hermitian(&m)?;
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol::TRACE_ABS || tr.im.abs() > tol::TRACE_ABS {
            return Err(Error::BadTrace { trace: tr.re });
        }
        Ok(DensityMatrix(m))
    }

    /// Physical state: Hermitian, trace 1 and positive semidefinite.
    pub fn state(m: CMatrix) -> Result<Self> {
        let rho = Self::new(m)?;
        let min = min_eigenvalue(&rho.0);
        if min < -tol::POSITIVITY_ABS {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(rho)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(identity(dim) * c(1.0 / dim as f64))
    }

    /// `|psi><psi|` for a (not necessarily normalized) state vector.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NonFiniteMatrix);
        }
        let psi = psi / c(norm);
        Ok(DensityMatrix(hermitian_part(&(&psi * psi.adjoint()))))
    }

    /// Haar-random pure state.
    pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let psi = DVector::from_fn(dim, |_, _| {
                Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            if let Ok(rho) = Self::pure(&psi) {
                return rho;
            }
        }
    }

    /// PSD projection; returns the projected state and the minimum
    /// eigenvalue before projection.
    pub fn project_psd(&self) -> (Self, f64) {
        let (m, min) = psd_project(&self.0);
        (DensityMatrix(hermitian_part(&m)), min)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn purity(&self) -> f64 {
        trace_product_re(&self.0, &self.0)
    }
}

impl AsRef<CMatrix> for DensityMatrix {
    fn as_ref(&self) -> &CMatrix {
        &self.0
    }
}

/// Coordinates in the Pauli basis: `x = tr(sigma_x m)` etc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }
}

pub fn bloch_decompose(m: &CMatrix) -> Result<BlochVector> {
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: m.nrows(),
        });
    }
    ensure_hermitian(m)?;
    // tr(sigma_x m) = 2 Re m01, tr(sigma_y m) = -2 Im m01... with m10 = conj(m01)
    Ok(BlochVector {
        x: (m[(0, 1)] + m[(1, 0)]).re,
        y: (I * (m[(0, 1)] - m[(1, 0)])).re,
        z: (m[(0, 0)] - m[(1, 1)]).re,
    })
}

/// Inverse of [`bloch_decompose`]: `(trace I + x sx + y sy + z sz) / 2`.
pub fn bloch_compose(v: BlochVector, trace: f64) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[
            c((trace + v.z) / 2.0),
            Complex64::new(v.x / 2.0, -v.y / 2.0),
            Complex64::new(v.x / 2.0, v.y / 2.0),
            c((trace - v.z) / 2.0),
        ],
    )
}

/// Quadratic Lyapunov function `V(A) = tr(A^2)` on Hermitian matrices.
pub fn lyapunov_v(err: &CMatrix) -> Result<f64> {
    ensure_hermitian(err)?;
    Ok(lyapunov_v_unchecked(err))
}

pub(crate) fn lyapunov_v_unchecked(err: &CMatrix) -> f64 {
    // tr(A^2) = sum |a_ij|^2 for Hermitian A
    err.iter().map(|z| z.norm_sqr()).sum()
}

/// Uhlmann fidelity `tr sqrt(sqrt(a) b sqrt(a))`, in [0, 1].
///
/// Both arguments are projected onto the PSD cone first, so observer
/// estimates with small negative eigenvalues are accepted.
pub fn fidelity(estimate: &DensityMatrix, truth: &DensityMatrix) -> Result<f64> {
    if estimate.dim() != truth.dim() {
        return Err(Error::DimensionMismatch {
            expected: truth.dim(),
            got: estimate.dim(),
        });
    }
    let (a, _) = estimate.project_psd();
    let (b, _) = truth.project_psd();
    let sa = psd_sqrt(a.matrix());
    let inner = hermitian_part(&(&sa * b.matrix() * &sa));
    let (values, _) = hermitian_eigen(&inner);
    let f: f64 = values
        .iter()
        .map(|&v| if v < tol::EIGEN_CLAMP { 0.0 } else { v.sqrt() })
        .sum();
    Ok(f.clamp(0.0, 1.0))
}

/// Traceless Hermitian basis orthonormal under `tr(A B)` (generalized
/// Gell-Mann matrices). Ordered symmetric, antisymmetric, diagonal; for
/// d = 2 this is `(sx, sy, sz) / sqrt(2)`.
pub fn gell_mann_basis(dim: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(dim * dim - 1);
    for j in 0..dim {
        for k in j + 1..dim {
            let mut m = zeros(dim);
            m[(j, k)] = c(s);
            m[(k, j)] = c(s);
            basis.push(m);
        }
    }
    for j in 0..dim {
        for k in j + 1..dim {
            let mut m = zeros(dim);
            m[(j, k)] = Complex64::new(0.0, -s);
            m[(k, j)] = Complex64::new(0.0, s);
            basis.push(m);
        }
    }
    for l in 1..dim {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut m = zeros(dim);
        for i in 0..l {
            m[(i, i)] = c(norm);
        }
        m[(l, l)] = c(-(l as f64) * norm);
        basis.push(m);
    }
    basis
}

/// Real coordinates of a Hermitian matrix in [`gell_mann_basis`].
pub fn gell_mann_coordinates(m: &CMatrix, basis: &[CMatrix]) -> Vec<f64> {
    basis.iter().map(|e| trace_product_re(e, m)).collect()
}

/// Dimension of the real span of the observable and its iterated
/// commutators `i[G, .]` with the given generators, up to `depth` nestings.
pub fn commutator_span_rank(observable: &CMatrix, generators: &[CMatrix], depth: usize) -> usize {
    let dim = observable.nrows();
    let basis = gell_mann_basis(dim);
    let mut frontier = vec![observable.clone()];
    let mut all = vec![observable.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for a in &frontier {
            for g in generators {
                next.push((g * a - a * g) * I);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    let rows: Vec<Vec<f64>> = all.iter().map(|m| gell_mann_coordinates(m, &basis)).collect();
    let mat = DMatrix::from_fn(rows.len(), basis.len(), |r, col| rows[r][col]);
    let sv = mat.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol::RANK_REL * top).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        max_abs(&(a - b)) <= tol
    }

    fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let m = CMatrix::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        hermitian_part(&m)
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
        assert_eq!(z, CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]));
        assert!(close(&(&x * &y), &(&z * I), 1e-15));
        for (i, a) in [&x, &y, &z].iter().enumerate() {
            for (j, b) in [&x, &y, &z].iter().enumerate() {
                let expected = if i == j { 2.0 } else { 0.0 };
                assert_abs_diff_eq!(trace_product_re(a, b), expected, epsilon = 1e-15);
            }
            assert!(is_hermitian(a));
            assert_abs_diff_eq!(trace_re(a), 0.0);
        }
    }

    #[test]
    fn spin_operators_match_standard_form() {
        let half = Spin::new(0.5).unwrap();
        assert!(close(&angular_momentum(half, Axis::Z), &(pauli(Axis::Z) * c(0.5)), 1e-15));
        assert!(close(&angular_momentum(half, Axis::X), &(pauli(Axis::X) * c(0.5)), 1e-15));
        assert!(close(&angular_momentum(half, Axis::Y), &(pauli(Axis::Y) * c(0.5)), 1e-15));

        let one = Spin::ONE;
        let fz = angular_momentum(one, Axis::Z);
        assert!(close(&fz, &CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(0.0), c(-1.0)])), 0.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let fx = CMatrix::from_row_slice(3, 3, &[c(0.0), c(s), c(0.0), c(s), c(0.0), c(s), c(0.0), c(s), c(0.0)]);
        assert!(close(&angular_momentum(one, Axis::X), &fx, 1e-15));
    }

    #[test]
    fn angular_momentum_commutation_relations() {
        for f in [0.5, 1.0, 1.5, 2.0, 3.0, 4.0] {
            let spin = Spin::new(f).unwrap();
            let (fx, fy, fz) = (
                angular_momentum(spin, Axis::X),
                angular_momentum(spin, Axis::Y),
                angular_momentum(spin, Axis::Z),
            );
            assert!(close(&commutator(&fx, &fy).unwrap(), &(&fz * I), 1e-12), "F = {f}");
            assert!(close(&commutator(&fy, &fz).unwrap(), &(&fx * I), 1e-12), "F = {f}");
            assert!(close(&commutator(&fz, &fx).unwrap(), &(&fy * I), 1e-12), "F = {f}");
            // Casimir F^2 = F(F+1) Id
            let casimir = &fx * &fx + &fy * &fy + &fz * &fz;
            assert!(close(&casimir, &(identity(spin.dim()) * c(f * (f + 1.0))), 1e-12));
        }
    }

    #[test]
    fn spin_rejects_non_half_integers() {
        assert!(matches!(Spin::new(0.3), Err(Error::InvalidSpin(_))));
        assert!(matches!(Spin::new(0.0), Err(Error::InvalidSpin(_))));
        assert!(matches!(Spin::new(-1.0), Err(Error::InvalidSpin(_))));
        assert_eq!(Spin::new(1.5).unwrap().dim(), 4);
        assert_eq!(Spin::HALF.to_string(), "1/2");
    }

    #[test]
    fn commutator_examples() {
        let (x, y, z) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
        assert_eq!(max_abs(&commutator(&x, &x).unwrap()), 0.0);
        assert!(close(&commutator(&x, &y).unwrap(), &(&z * Complex64::new(0.0, 2.0)), 1e-15));
        assert!(matches!(
            commutator(&x, &identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expectation_values() {
        let z = pauli(Axis::Z);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(expect(&z, mixed.matrix()).unwrap(), 0.0);
        let up = bloch_compose(BlochVector::new(0.0, 0.0, 1.0), 1.0);
        assert_abs_diff_eq!(expect(&z, &up).unwrap(), 1.0);
        let rho = bloch_compose(BlochVector::new(0.6, 0.0, 0.0), 1.0);
        assert_abs_diff_eq!(expect(&pauli(Axis::X), &rho).unwrap(), 0.6, epsilon = 1e-15);
        assert!(expect(&z, &identity(3)).is_err());
    }

    #[test]
    fn bloch_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_eq!(bloch_decompose(mixed.matrix()).unwrap(), BlochVector::new(0.0, 0.0, 0.0));
        let m = (pauli(Axis::X) * c(0.6) + pauli(Axis::Z) * c(0.8)) * c(0.5);
        let v = bloch_decompose(&m).unwrap();
        assert_abs_diff_eq!(v.x, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(v.y, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.z, 0.8, epsilon = 1e-15);
        let y = bloch_decompose(&(pauli(Axis::Y) * c(0.5))).unwrap();
        assert_abs_diff_eq!(y.y, 1.0, epsilon = 1e-15);

        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(bloch_decompose(&bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_v(&zeros(2)).unwrap(), 0.0);
        let m = (pauli(Axis::X) * c(0.6) + pauli(Axis::Z) * c(0.8)) * c(0.5);
        assert_abs_diff_eq!(lyapunov_v(&m).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(lyapunov_v(&pauli(Axis::Z)).unwrap(), 2.0);
        assert!(lyapunov_v(&CMatrix::from_row_slice(2, 2, &[c(0.0), I, I, c(0.0)])).is_err());
    }

    #[test]
    fn lyapunov_equals_sum_of_squared_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 2..6 {
            let a = random_hermitian(dim, &mut rng);
            let (values, _) = hermitian_eigen(&a);
            let expected: f64 = values.iter().map(|v| v * v).sum();
            assert_abs_diff_eq!(lyapunov_v(&a).unwrap(), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn fidelity_examples() {
        let up = DensityMatrix::state(bloch_compose(BlochVector::new(0.0, 0.0, 1.0), 1.0)).unwrap();
        let down = DensityMatrix::state(bloch_compose(BlochVector::new(0.0, 0.0, -1.0), 1.0)).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(fidelity(&up, &up).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&up, &down).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&mixed, &up).unwrap(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&up, &mixed).unwrap(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!(fidelity(&up, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn fidelity_accepts_slightly_non_positive_estimates() {
        // Bloch vector of length 1.05 lies just outside the ball
        let outside = DensityMatrix::new(bloch_compose(BlochVector::new(0.0, 0.0, 1.05), 1.0)).unwrap();
        let up = DensityMatrix::state(bloch_compose(BlochVector::new(0.0, 0.0, 1.0), 1.0)).unwrap();
        let (projected, min) = outside.project_psd();
        assert!(min < 0.0);
        assert_abs_diff_eq!(min_eigenvalue(projected.matrix()), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&outside, &up).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(matches!(DensityMatrix::new(identity(2)), Err(Error::BadTrace { .. })));
        let negative = bloch_compose(BlochVector::new(0.0, 0.0, 1.5), 1.0);
        assert!(DensityMatrix::new(negative.clone()).is_ok());
        assert!(matches!(DensityMatrix::state(negative), Err(Error::NotPositive { .. })));
        let mut nan = identity(2) * c(0.5);
        nan[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(DensityMatrix::new(nan), Err(Error::NonFiniteMatrix)));
    }

    #[test]
    fn random_pure_states_are_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 3, 5] {
            let rho = DensityMatrix::random_pure(dim, &mut rng);
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(trace_re(rho.matrix()), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gell_mann_basis_is_orthonormal_and_traceless() {
        for dim in [2, 3, 4] {
            let basis = gell_mann_basis(dim);
            assert_eq!(basis.len(), dim * dim - 1);
            for (i, a) in basis.iter().enumerate() {
                assert!(is_hermitian(a));
                assert_abs_diff_eq!(trace_re(a), 0.0, epsilon = 1e-15);
                for (j, b) in basis.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(trace_product(a, b).re, expected, epsilon = 1e-14);
                }
            }
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let two = gell_mann_basis(2);
        assert!(close(&two[0], &(pauli(Axis::X) * c(s)), 1e-15));
        assert!(close(&two[1], &(pauli(Axis::Y) * c(s)), 1e-15));
        assert!(close(&two[2], &(pauli(Axis::Z) * c(s)), 1e-15));
    }

    #[test]
    fn sigma_z_and_commutators_span_traceless_hermitian_2x2() {
        let gens = [pauli(Axis::X), pauli(Axis::Y)];
        assert_eq!(commutator_span_rank(&pauli(Axis::Z), &gens, 0), 1);
        assert_eq!(commutator_span_rank(&pauli(Axis::Z), &gens, 1), 3);
        // a single fixed rotation axis leaves one direction unreachable at depth 1
        assert_eq!(commutator_span_rank(&pauli(Axis::Z), &gens[..1], 1), 2);
    }

    #[test]
    fn spin_one_needs_the_quadratic_term_for_full_rank() {
        let one = Spin::ONE;
        let (fx, fy, fz) = (
            angular_momentum(one, Axis::X),
            angular_momentum(one, Axis::Y),
            angular_momentum(one, Axis::Z),
        );
        let linear_only = commutator_span_rank(&fz, &[fx.clone(), fy.clone()], 4);
        assert!(linear_only < 8);
        let fx2 = &fx * &fx;
        assert_eq!(commutator_span_rank(&fz, &[fx, fy, fx2], 4), 8);
    }
}
