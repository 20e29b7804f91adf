use std::io;

use thiserror::Error;

use crate::dynamics::Direction;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("trace must be 1, got {trace}")]
    BadTrace { trace: f64 },

    #[error("state is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,

    #[error("spin quantum number must be a positive half-integer, got {0}")]
    InvalidSpin(f64),

    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("cubic spline needs at least 4 knots, got {0}")]
    TooFewKnots(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("observability precondition failed in {attempts} consecutive draws")]
    PreconditionExhausted { attempts: usize },

    #[error("integration produced non-finite values at t = {t}")]
    NonFinite { t: f64 },

    #[error("observer blew up in iteration {iteration} ({direction:?} pass) at step {step}")]
    Blowup {
        iteration: usize,
        direction: Direction,
        step: usize,
    },

    #[error("record grid mismatch: {0}")]
    GridMismatch(String),

    #[error("diagnostics need the truth trajectory")]
    MissingTruth,

    #[error("{0}")]
    Unsupported(String),

    #[error("response matrix has rank {rank}, need {expected}: control is not informationally complete")]
    Unobservable { rank: usize, expected: usize },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PreconditionExhausted { .. } => 3,
            Error::NonFinite { .. } => 4,
            Error::GridMismatch(_) => 5,
            Error::Blowup { .. } => 6,
            Error::Unobservable { .. } => 7,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
