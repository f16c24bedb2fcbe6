//! Finite-time, bath-free thermalization of a quantum harmonic
//! oscillator by sudden frequency-and-coupling quenches of an
//! identical auxiliary oscillator.
//!
//! The two-mode pure Gaussian state is tracked either as a complex
//! quadratic form or as a 4x4 covariance matrix; the reduced state of
//! the system oscillator is summarized by a three-component R-vector
//! in which exact thermal states form a hyperbola. The crate provides:
//!
//! - [`state`]: R-vector geometry, thermal targets, effective inverse
//!   temperature, mean energy;
//! - [`dynamics`]: piecewise-constant quench schedules, analytic
//!   single-quench amplitudes, symplectic covariance propagation;
//! - [`sds`]: the closed-form discrete set of exactly thermalizing
//!   parameters, its envelope, and a bounded search for indices
//!   approximating an arbitrary target temperature;
//! - [`solver`]: residuals, finite-difference Jacobians, perturbative
//!   corrections and a damped Newton iteration for off-set targets;
//! - [`protocol`]: thermalize / cool / heat-cool plans and an executor
//!   that simulates them from the ground state and checks every
//!   intermediate target.
//!
//! Units: `hbar = 1`, frequencies in units of the system frequency,
//! energies in units of it too (the ground energy is `omega / 2`),
//! inverse temperatures in units of the ground-state energy unless a
//! function says otherwise.

#![forbid(unsafe_code)]

pub mod dynamics;
pub mod error;
pub mod protocol;
pub mod sds;
pub mod solver;
pub mod state;

pub use error::{Error, Result};
pub use sds::{SdsIndex, SdsParameters};
pub use state::{RVector, DEFAULT_THERMALITY_TOL};
