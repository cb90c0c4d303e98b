//! The stationary boundary-value problem on the half line.
//!
//! Integrating the steady equations once reduces them to a 2x2 autonomous
//! system for `(ubar, tbar) = (u + 1, theta - 1)`:
//!
//! ```text
//! d/dx (ubar, tbar) = J (ubar, tbar) + (fbar, gbar)
//! ```
//!
//! with the mass-flux identity `rho u = -1` recovering the density. The
//! equilibrium `(0, 0)` is a stable node for supersonic far fields, a saddle
//! for subsonic ones, and degenerates to a center-stable point at Mach 1,
//! where invariant-manifold geometry decides which boundary data admit a
//! stationary wave.

mod manifold;
mod profile;

pub use manifold::{
    boundary_near_stable_manifold, boundary_on_center_manifold, center_manifold_numeric,
    manifold_coefficients, stable_manifold_numeric, CenterManifold, ManifoldExpansion,
    OrigManifoldExpansion, StableCurve,
};
pub use profile::{
    classify_boundary, degenerate_structure, solve_center_flow, solve_stationary,
    solve_stationary_with, BoundaryClass, CenterFlow, Classification, ClassifySettings,
    StationaryProfile, StructureReport,
};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::model::{DimensionlessParams, FlowRegime};
use crate::{Error, Result};

/// Guard around the removable singularity of the reduced momentum
/// nonlinearity at `ubar = 1` (that is, `u = 0`).
pub const SINGULARITY_THRESHOLD: f64 = 1e-8;

/// Jacobian of the reduced stationary system at the far-field equilibrium.
pub fn jacobian(p: &DimensionlessParams) -> Matrix2<f64> {
    let m2g = p.mach * p.mach * p.gamma;
    Matrix2::new(
        (1.0 / m2g - 1.0) / p.mu_hat,
        1.0 / (p.mu_hat * m2g),
        1.0 / (p.kappa_hat * m2g),
        -p.cv_hat / (p.kappa_hat * p.mach * p.mach),
    )
}

/// The auxiliary constants `(a, b, c)` whose combinations give
/// `tr J = -(a + b + c)` and `det J = b c`.
pub fn trace_det_coefficients(p: &DimensionlessParams) -> (f64, f64, f64) {
    let m2 = p.mach * p.mach;
    let a = (p.gamma - 1.0) / (p.mu_hat * m2 * p.gamma);
    let b = (m2 - 1.0) / (p.mu_hat * m2);
    let c = p.cv_hat / (p.kappa_hat * m2);
    (a, b, c)
}

/// Right side of the reduced system at `(ubar, tbar)`.
///
/// Errors with [`Error::Singularity`] when `ubar` is too close to 1.
pub fn ode_rhs(ubar: f64, tbar: f64, p: &DimensionlessParams) -> Result<(f64, f64)> {
    let gap = (ubar - 1.0).abs();
    if gap < SINGULARITY_THRESHOLD {
        return Err(Error::Singularity(gap));
    }
    let m2g = p.mach * p.mach * p.gamma;
    let fbar = -ubar * (ubar + tbar) / (p.mu_hat * m2g * (ubar - 1.0));
    let gbar = ubar * ubar / (2.0 * p.kappa_hat);
    let j = jacobian(p);
    Ok((
        j[(0, 0)] * ubar + j[(0, 1)] * tbar + fbar,
        j[(1, 0)] * ubar + j[(1, 1)] * tbar + gbar,
    ))
}

pub(crate) fn rhs_vec(p: &DimensionlessParams, w: &[f64; 2]) -> Result<[f64; 2]> {
    let (du, dt) = ode_rhs(w[0], w[1], p)?;
    Ok([du, dt])
}

/// Eigenstructure of the equilibrium, with the regime-dependent conventions
/// used throughout: eigenvalues ordered `lambda1 >= lambda2`; eigenvectors
/// unit length with the first nonzero component positive, except at Mach 1
/// where the closed-form vectors `r1 = (-1, 1-gamma)`,
/// `r2 = (kappa_hat (1-gamma), mu_hat)` are kept verbatim so that
/// `det P = -d` exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Equilibrium {
    pub jacobian: Matrix2<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub r1: Vector2<f64>,
    pub r2: Vector2<f64>,
    pub p: Matrix2<f64>,
    pub p_inv: Matrix2<f64>,
    pub regime: FlowRegime,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Equilibrium {
    pub fn det_p(&self) -> f64 {
        self.p[(0, 0)] * self.p[(1, 1)] - self.p[(0, 1)] * self.p[(1, 0)]
    }

    /// Transform boundary offsets `(u + 1, theta - 1)` into the diagonal
    /// coordinates `(Uhat, Thetahat)`.
    pub fn to_diagonal(&self, ubar: f64, tbar: f64) -> (f64, f64) {
        let v = self.p_inv * Vector2::new(ubar, tbar);
        (v[0], v[1])
    }

    /// Inverse of [`Self::to_diagonal`].
    pub fn from_diagonal(&self, u: f64, theta: f64) -> (f64, f64) {
        let v = self.p * Vector2::new(u, theta);
        (v[0], v[1])
    }

    /// Nonlinear part of the diagonalized system,
    /// `(f, g) = P^{-1} (fbar, gbar)(P (U, Theta))`.
    pub fn diagonal_nonlinearity(
        &self,
        params: &DimensionlessParams,
        u: f64,
        theta: f64,
    ) -> Result<(f64, f64)> {
        let (ubar, tbar) = self.from_diagonal(u, theta);
        let gap = (ubar - 1.0).abs();
        if gap < SINGULARITY_THRESHOLD {
            return Err(Error::Singularity(gap));
        }
        let m2g = params.mach * params.mach * params.gamma;
        let fbar = -ubar * (ubar + tbar) / (params.mu_hat * m2g * (ubar - 1.0));
        let gbar = ubar * ubar / (2.0 * params.kappa_hat);
        let v = self.p_inv * Vector2::new(fbar, gbar);
        Ok((v[0], v[1]))
    }
}

fn unit_sign_convention(mut v: Vector2<f64>) -> Vector2<f64> {
    v /= v.norm();
    let lead = if v[0].abs() > 1e-14 { v[0] } else { v[1] };
    if lead < 0.0 {
        -v
    } else {
        v
    }
}

/// Full eigen-analysis of the equilibrium Jacobian.
pub fn eigen_analysis(params: &DimensionlessParams) -> Result<Equilibrium> {
    let j = jacobian(params);
    let (a, b, c) = trace_det_coefficients(params);
    let regime = params.regime();
    let (lambda1, lambda2, r1, r2) = match regime {
        FlowRegime::Transonic => {
            let lambda2 = -params.cv_hat * params.d / (params.mu_hat * params.kappa_hat);
            let r1 = Vector2::new(-1.0, 1.0 - params.gamma);
            let r2 = Vector2::new(params.kappa_hat * (1.0 - params.gamma), params.mu_hat);
            (0.0, lambda2, r1, r2)
        }
        _ => {
            let tr = -(a + b + c);
            let det = b * c;
            let disc = tr * tr - 4.0 * det;
            if disc <= 0.0 {
                return Err(Error::Numerical(format!(
                    "eigen discriminant {disc:.3e} not positive; expected real spectrum"
                )));
            }
            // tr < 0 in both regimes, so tr - sqrt(disc) is cancellation-free.
            let lambda2 = 0.5 * (tr - disc.sqrt());
            let lambda1 = if lambda2 != 0.0 {
                det / lambda2
            } else {
                0.5 * (tr + disc.sqrt())
            };
            // J12 > 0 always, so (J12, lambda - J11) never degenerates.
            let r1 = unit_sign_convention(Vector2::new(j[(0, 1)], lambda1 - j[(0, 0)]));
            let r2 = unit_sign_convention(Vector2::new(j[(0, 1)], lambda2 - j[(0, 0)]));
            (lambda1, lambda2, r1, r2)
        }
    };
    let p = Matrix2::from_columns(&[r1, r2]);
    let p_inv = p
        .try_inverse()
        .ok_or_else(|| Error::Numerical("eigenvector matrix is singular".into()))?;
    Ok(Equilibrium {
        jacobian: j,
        lambda1,
        lambda2,
        r1,
        r2,
        p,
        p_inv,
        regime,
        a,
        b,
        c,
    })
}
