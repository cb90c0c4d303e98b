//! Stationary boundary-layer waves of a viscous heat-conductive ideal gas
//! blowing out of the half line `x >= 0`, together with an explicit
//! finite-difference evolution of the full system and the weighted-norm
//! diagnostics used to measure how perturbations decay toward those waves.
//!
//! The crate is organized around four concerns:
//!
//! * [`model`] — nondimensionalization of a physical gas configuration into
//!   the handful of constants (`gamma`, `mu_hat`, `kappa_hat`, `mach`) that
//!   drive everything else.
//! * [`stationary`] — the 2x2 autonomous ODE for the stationary wave:
//!   equilibrium eigenstructure, invariant manifolds at the sonic point,
//!   existence classification of boundary data, and profile computation.
//! * [`evolution`] — method-of-lines integration of the time-dependent
//!   system on a truncated half line with outflow boundary conditions.
//! * [`diagnostics`] — energy form, plain / delta-scaled / exponential
//!   weighted norms, the quadratic-form suite, and decay-rate fitting.

pub mod diagnostics;
pub mod evolution;
pub mod model;
pub mod numerics;
pub mod stationary;

mod error;

pub use error::{Error, Result};
