//! Explicit finite-difference time integration of the dimensionless system
//! on a truncated half line with outflow boundary conditions.
//!
//! The primitive-variable form is discretized directly: first-order upwind
//! differences for the convective terms (one-sided toward larger `x`, valid
//! because `u < 0` uniformly in the studied regime), second-order central
//! differences for the viscous, heat-conduction, pressure-gradient, and
//! work terms. Exactly two boundary values `(u, theta)(t, 0)` are imposed;
//! the boundary density evolves by a one-sided continuity update, matching
//! the single outgoing hyperbolic characteristic. Conservation is monitored
//! through [`flux_balance`], not enforced.

mod perturbation;
mod scheme;

pub use perturbation::{
    build_initial, perturb_state, FieldMask, InitialState, PerturbationShape, PerturbationSpec,
};
pub use scheme::{
    apply_boundary, conservation_sample, dt_bounds, evolve, flux_balance, pde_rhs, stable_dt,
    step, ConservationSample, EvolveOutcome, FluxBalance, Rhs, Stepper,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform grid on `[0, x_max]` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_max: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x_max: f64, n: usize) -> Result<Self> {
        let g = Self { x_max, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::Domain(format!(
                "grid needs at least 16 nodes, got {}",
                self.n
            )));
        }
        if !(self.x_max > 0.0) {
            return Err(Error::Domain("grid length x_max must be positive".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.x_max / (self.n - 1) as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n).map(|i| i as f64 * dx).collect()
    }
}

/// Time integrator for the method-of-lines system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeIntegrator {
    Rk2,
    Rk4,
}

/// Treatment of the truncated far end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FarFieldBc {
    /// Pin `(rho, u, theta)(x_max) = (1, -1, 1)`.
    Dirichlet,
    /// Zeroth-order extrapolation from the last interior node; preferred
    /// for long transonic runs whose algebraic tails violate the Dirichlet
    /// values slightly.
    Extrapolation,
}

/// Stability fractions and scheme choices.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchemeConfig {
    /// Advective Courant number.
    pub cfl: f64,
    /// Fraction of the explicit diffusion limit.
    pub diff_safety: f64,
    pub integrator: TimeIntegrator,
    pub farfield_bc: FarFieldBc,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            cfl: 0.4,
            diff_safety: 0.4,
            integrator: TimeIntegrator::Rk2,
            farfield_bc: FarFieldBc::Dirichlet,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.9) {
            return Err(Error::Domain(format!(
                "cfl must lie in (0, 0.9], got {}",
                self.cfl
            )));
        }
        if !(self.diff_safety > 0.0 && self.diff_safety <= 0.5) {
            return Err(Error::Domain(format!(
                "diff_safety must lie in (0, 0.5], got {}",
                self.diff_safety
            )));
        }
        Ok(())
    }
}

/// The three primitive fields at one time instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionState {
    pub t: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
}

impl EvolutionState {
    pub fn constant_far_field(grid: &Grid) -> Self {
        Self {
            t: 0.0,
            rho: vec![1.0; grid.n],
            u: vec![-1.0; grid.n],
            theta: vec![1.0; grid.n],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Positivity of `rho`, `theta` and uniform negativity of `u`.
    pub fn check_invariants(&self) -> Result<()> {
        for i in 0..self.len() {
            let (r, u, th) = (self.rho[i], self.u[i], self.theta[i]);
            if !(r > 0.0) || !(th > 0.0) || !(u < 0.0) || !r.is_finite() || !u.is_finite() || !th.is_finite() {
                return Err(Error::Numerical(format!(
                    "state invariants violated at t = {:.6}, node {}: rho = {:.3e}, u = {:.3e}, theta = {:.3e}",
                    self.t, i, r, u, th
                )));
            }
        }
        Ok(())
    }

    /// Sup-norm distance to reference fields, over all three components.
    pub fn sup_distance(&self, rho: &[f64], u: &[f64], theta: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            worst = worst
                .max((self.rho[i] - rho[i]).abs())
                .max((self.u[i] - u[i]).abs())
                .max((self.theta[i] - theta[i]).abs());
        }
        worst
    }
}
