//! Numerical tolerances shared across the crate.

/// Relative Hermiticity tolerance: `max|M - M†| <= HERMITIAN_REL * max|M|`.
pub const HERMITIAN_REL: f64 = 1e-12;

/// Absolute tolerance on `tr(M) = 1` for density matrices.
pub const TRACE_ABS: f64 = 1e-10;

/// Eigenvalues below this are clamped to zero before taking square roots.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Smallest eigenvalue accepted for a physical (positive) state.
pub const POSITIVITY_ABS: f64 = 1e-8;

/// Trace drift allowed on observer states at every step.
pub const OBSERVER_TRACE_ABS: f64 = 1e-9;

/// Hermiticity drift allowed on observer states at every step.
pub const OBSERVER_HERMITIAN_ABS: f64 = 1e-10;

/// `|B0^2 theta'(0)| < PRECONDITION_REL * B0^2` counts as a violation.
pub const PRECONDITION_REL: f64 = 1e-6;

/// Maximum number of consecutive random control draws before giving up.
pub const PRECONDITION_MAX_DRAWS: usize = 100;

/// Relative singular-value cutoff for the least-squares pseudo-inverse.
pub const SVD_CUTOFF_REL: f64 = 1e-8;

/// Relative singular-value threshold for the numerical rank.
pub const RANK_REL: f64 = 1e-6;

/// Blowup guard: a pass may grow the state norm by at most `exp(BLOWUP_RATE * Gamma * T)`.
pub const BLOWUP_RATE: f64 = 5.0;

/// Largest spin handled (d = 2F + 1 <= 9 covers F <= 4).
pub const MAX_TWICE_SPIN: u32 = 8;
