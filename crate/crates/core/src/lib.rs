//! Initial-state reconstruction for continuously measured spin ensembles
//! with back-and-forth nudging (BFN) observers.
//!
//! A spin-F ensemble evolves under a Lindblad master equation driven by a
//! rotating transverse field while one observable is recorded over
//! `[0, T]`. The estimator runs a Luenberger-type observer forward over the
//! record and a time-reversed copy backward over it, many times, so a finite
//! record behaves like an arbitrarily long one.
//!
//! Modules:
//! - [`qops`]: spin operators, Hermitian matrix functions, fidelity.
//! - [`dynamics`]: generators, RK4 and measurement records.
//! - [`controls`]: spline-phase control fields and the observability precondition.
//! - [`bfn`]: the estimator and its Lyapunov diagnostics.
//! - [`oracle`]: linear least-squares reconstruction used as a cross-check.
//! - [`cli`]: experiment configuration, presets and file outputs.

pub mod bfn;
pub mod cli;
pub mod controls;
pub mod dynamics;
pub mod error;
pub mod oracle;
pub mod qops;
pub mod rng;
pub mod serial;
pub mod tol;

pub use bfn::{run_bfn, BfnOptions, BfnRun};
pub use controls::ControlField;
pub use dynamics::{Direction, MeasurementRecord, PhysicsConfig};
pub use error::{Error, Result};
pub use qops::{CMatrix, DensityMatrix, Spin};
