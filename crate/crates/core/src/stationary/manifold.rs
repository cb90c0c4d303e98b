//! Invariant manifolds at the transonic equilibrium.
//!
//! At Mach 1 the equilibrium carries a one-dimensional center manifold
//! `Theta = h_c(U)` and a one-dimensional stable manifold `U = h_s(Theta)`
//! in the diagonalized coordinates. Their quadratic and cubic Taylor
//! coefficients have closed forms controlled by the Prandtl number; this
//! module provides both those closed forms and two independent numerical
//! constructions (a polynomial collocation iteration on the invariance
//! equation, and backward integration along the stable direction) that
//! serve as cross-checks for each other.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::model::{BoundaryData, DimensionlessParams, FlowRegime};
use crate::numerics::{poly_fit_powers, Rk45, Rk45Options};
use crate::stationary::{eigen_analysis, rhs_vec, Equilibrium};
use crate::{Error, Result};

/// Where the closed-form coefficient comparisons count a Prandtl number as
/// sitting exactly on a degeneracy threshold.
const PR_THRESHOLD_TOL: f64 = 1e-9;

/// Taylor data of a manifold in the original `(u, theta)` plane,
/// `theta = 1 + linear (u+1) + quadratic (u+1)^2 [+ cubic (u+1)^3]`.
/// The cubic term is only known in closed form at the degenerate Prandtl
/// numbers, where the quadratic one vanishes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OrigManifoldExpansion {
    pub linear: f64,
    pub quadratic: f64,
    pub cubic: Option<f64>,
}

/// Closed-form manifold coefficients at the transonic equilibrium.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldExpansion {
    /// Quadratic center-manifold coefficient; sign equals `sign(Pr - 2)`.
    pub c2: f64,
    /// Cubic center-manifold coefficient, known in closed form only when
    /// `Pr = 2` (where it is positive).
    pub c3: Option<f64>,
    /// Quadratic stable-manifold coefficient; sign equals
    /// `-sign(Pr - gamma_star)`.
    pub s2: f64,
    /// Cubic stable-manifold coefficient, known in closed form only when
    /// `Pr = gamma_star`.
    pub s3: Option<f64>,
    pub gamma_star: f64,
    pub prandtl: f64,
    /// `theta = h~_c(u)` around `u = -1`.
    pub center_orig: OrigManifoldExpansion,
    /// `theta = h~_s(u)` around `u = -1`.
    pub stable_orig: OrigManifoldExpansion,
}

/// Closed-form Taylor coefficients of the invariant manifolds. Only defined
/// in the transonic regime.
pub fn manifold_coefficients(params: &DimensionlessParams) -> Result<ManifoldExpansion> {
    if params.regime() != FlowRegime::Transonic {
        return Err(Error::Regime(format!(
            "manifold coefficients require Mach 1, got {}",
            params.mach
        )));
    }
    let g = params.gamma;
    let mu = params.mu_hat;
    let ka = params.kappa_hat;
    let d = params.d;
    let pr = params.prandtl;
    let gs = params.gamma_star();
    let gm1 = g - 1.0;

    let c2 = g * gm1 * gm1 * ka * (pr - 2.0) / (2.0 * d * d);
    let c3 = ((pr - 2.0).abs() <= PR_THRESHOLD_TOL).then(|| g * gm1 * gm1 * ka / (d * d));
    let s2 = -gm1.powi(3) * mu * ka.powi(3) * (pr - gs) / (2.0 * d * d);
    let s3 = ((pr - gs).abs() <= PR_THRESHOLD_TOL)
        .then(|| g * gm1.powi(5) * mu * ka.powi(4) / (6.0 * d * d));

    let denom = pr + g - 1.0;
    let center_orig = OrigManifoldExpansion {
        linear: gm1,
        quadratic: g * gm1 * (pr - 2.0) / (2.0 * denom),
        cubic: ((pr - 2.0).abs() <= PR_THRESHOLD_TOL).then(|| -g * gm1 / denom),
    };
    let stable_orig = OrigManifoldExpansion {
        linear: -pr,
        quadratic: pr * (pr - gs) / (2.0 * denom),
        cubic: ((pr - gs).abs() <= PR_THRESHOLD_TOL).then(|| g * gm1 * pr / (6.0 * denom)),
    };

    Ok(ManifoldExpansion {
        c2,
        c3,
        s2,
        s3,
        gamma_star: gs,
        prandtl: pr,
        center_orig,
        stable_orig,
    })
}

/// A numerically computed center manifold `Theta = h_c(U)` represented by a
/// power-basis polynomial `sum_k coeffs[k] U^powers[k]` valid on
/// `|U| <= radius`.
#[derive(Debug, Clone)]
pub struct CenterManifold {
    pub radius: f64,
    pub powers: Vec<u32>,
    pub coeffs: Vec<f64>,
    /// `(U, h_c(U))` samples on the collocation grid.
    pub samples: Vec<(f64, f64)>,
    /// Max invariance-equation residual over the collocation grid.
    pub residual: f64,
}

impl CenterManifold {
    pub fn eval(&self, u: f64) -> f64 {
        self.powers
            .iter()
            .zip(&self.coeffs)
            .map(|(&p, &c)| c * u.powi(p as i32))
            .sum()
    }

    pub fn eval_deriv(&self, u: f64) -> f64 {
        self.powers
            .iter()
            .zip(&self.coeffs)
            .map(|(&p, &c)| c * p as f64 * u.powi(p as i32 - 1))
            .sum()
    }

    /// Coefficient of `U^2`.
    pub fn quadratic_coefficient(&self) -> f64 {
        self.coeff_of(2)
    }

    /// Coefficient of `U^3`.
    pub fn cubic_coefficient(&self) -> f64 {
        self.coeff_of(3)
    }

    fn coeff_of(&self, power: u32) -> f64 {
        self.powers
            .iter()
            .position(|&p| p == power)
            .map(|i| self.coeffs[i])
            .unwrap_or(0.0)
    }
}

/// Solve the center-manifold invariance equation
/// `lambda2 h + g(U, h) = h'(U) f(U, h)` by collocation on a symmetric grid
/// with a polynomial ansatz `h(U) = sum_{k=2}^{order} a_k U^k`, iterating
/// `h <- (h' f - g) / lambda2` in coefficient space.
///
/// This construction never consults the closed-form Taylor coefficients, so
/// it can serve as their independent oracle.
pub fn center_manifold_numeric(
    params: &DimensionlessParams,
    radius: f64,
    order: u32,
) -> Result<CenterManifold> {
    if params.regime() != FlowRegime::Transonic {
        return Err(Error::Regime(
            "center manifold requires the transonic regime".into(),
        ));
    }
    if !(radius > 0.0 && radius <= 0.2) {
        return Err(Error::Domain(format!(
            "center-manifold radius must lie in (0, 0.2], got {radius}"
        )));
    }
    if order < 3 {
        return Err(Error::Domain("polynomial order must be at least 3".into()));
    }
    let eq = eigen_analysis(params)?;
    let lambda2 = eq.lambda2;
    let n = 41usize;
    let us: Vec<f64> = (0..n)
        .map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64)
        .collect();
    let powers: Vec<u32> = (2..=order).collect();
    let mut coeffs = vec![0.0; powers.len()];

    let eval = |coeffs: &[f64], u: f64| -> f64 {
        powers
            .iter()
            .zip(coeffs)
            .map(|(&p, &c)| c * u.powi(p as i32))
            .sum()
    };
    let eval_d = |coeffs: &[f64], u: f64| -> f64 {
        powers
            .iter()
            .zip(coeffs)
            .map(|(&p, &c)| c * p as f64 * u.powi(p as i32 - 1))
            .sum()
    };

    let mut converged = false;
    for _ in 0..500 {
        let mut target = Vec::with_capacity(n);
        for &u in &us {
            let h = eval(&coeffs, u);
            let hp = eval_d(&coeffs, u);
            let (f, g) = eq.diagonal_nonlinearity(params, u, h)?;
            target.push((hp * f - g) / lambda2);
        }
        let next = poly_fit_powers(&us, &target, &powers)?;
        // Convergence measured in function values: high-order coefficients
        // rattle at rounding level without moving the manifold.
        let change = us
            .iter()
            .map(|&u| (eval(&next, u) - eval(&coeffs, u)).abs())
            .fold(0.0, f64::max);
        coeffs = next;
        if change < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(
            "center-manifold collocation iteration stalled".into(),
        ));
    }
    let mut residual: f64 = 0.0;
    let mut samples = Vec::with_capacity(n);
    for &u in &us {
        let h = eval(&coeffs, u);
        let hp = eval_d(&coeffs, u);
        let (f, g) = eq.diagonal_nonlinearity(params, u, h)?;
        residual = residual.max((lambda2 * h + g - hp * f).abs());
        samples.push((u, h));
    }
    if residual > 1e-4 {
        return Err(Error::NonConvergence(format!(
            "center-manifold residual {residual:.3e} too large for radius {radius}"
        )));
    }
    Ok(CenterManifold {
        radius,
        powers,
        coeffs,
        samples,
        residual,
    })
}

/// A numerically traced stable manifold `U = h_s(Theta)` in diagonal
/// coordinates, fitted by an even-anchored polynomial over both branches.
#[derive(Debug, Clone)]
pub struct StableCurve {
    pub radius: f64,
    pub powers: Vec<u32>,
    pub coeffs: Vec<f64>,
    /// `(Theta, U)` samples collected along the backward trajectories.
    pub samples: Vec<(f64, f64)>,
}

impl StableCurve {
    pub fn eval(&self, theta: f64) -> f64 {
        self.powers
            .iter()
            .zip(&self.coeffs)
            .map(|(&p, &c)| c * theta.powi(p as i32))
            .sum()
    }

    pub fn quadratic_coefficient(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn cubic_coefficient(&self) -> f64 {
        self.coeffs[1]
    }
}

/// Trace the stable manifold by integrating the reduced system backward in
/// `x` from small offsets `+-eps r2` at the equilibrium, then fit
/// `U = s2 Theta^2 + s3 Theta^3 + ...` through the collected points.
///
/// Available in the transonic and subsonic regimes (where a stable
/// direction exists alongside a non-stable one).
pub fn stable_manifold_numeric(params: &DimensionlessParams, radius: f64) -> Result<StableCurve> {
    let eq = eigen_analysis(params)?;
    stable_manifold_from_equilibrium(params, &eq, radius)
}

pub(crate) fn stable_manifold_from_equilibrium(
    params: &DimensionlessParams,
    eq: &Equilibrium,
    radius: f64,
) -> Result<StableCurve> {
    match eq.regime {
        FlowRegime::Transonic | FlowRegime::Subsonic => {}
        FlowRegime::Supersonic => {
            return Err(Error::Regime(
                "a supersonic equilibrium is a stable node; the one-dimensional \
                 stable manifold is only defined for Mach <= 1"
                    .into(),
            ))
        }
    }
    if !(radius > 0.0 && radius <= 0.25) {
        return Err(Error::Domain(format!(
            "stable-manifold radius must lie in (0, 0.25], got {radius}"
        )));
    }
    let eps = 1e-8;
    let r2_unit = eq.r2 / eq.r2.norm();
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for sign in [1.0, -1.0] {
        let w0 = [sign * eps * r2_unit[0], sign * eps * r2_unit[1]];
        let mut solver = Rk45::new(
            |_x, w: &[f64; 2]| {
                let r = rhs_vec(params, w)?;
                Ok([-r[0], -r[1]])
            },
            Rk45Options {
                h_initial: 1e-3,
                ..Rk45Options::default()
            },
        );
        // Backward time needed to grow from eps to radius is about
        // ln(radius/eps)/|lambda2|; 4x that is generous.
        let s_cap = 4.0 * (radius / eps).ln() / eq.lambda2.abs() + 10.0;
        let path = solver
            .trace_until(0.0, w0, s_cap, |_s, w| {
                let v = eq.p_inv * Vector2::new(w[0], w[1]);
                v[1].abs() > 1.05 * radius
            })
            .map_err(|e| {
                Error::NonConvergence(format!(
                    "stable-manifold trace left the validity neighborhood: {e}"
                ))
            })?;
        for (_s, w) in path {
            let v = eq.p_inv * Vector2::new(w[0], w[1]);
            if v[1].abs() > 10.0 * eps && v[1].abs() <= radius {
                samples.push((v[1], v[0]));
            }
        }
    }
    if samples.len() < 20 {
        return Err(Error::NonConvergence(format!(
            "stable-manifold trace produced only {} usable samples",
            samples.len()
        )));
    }
    let thetas: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let us: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let powers = vec![2u32, 3, 4, 5];
    let coeffs = poly_fit_powers(&thetas, &us, &powers)?;
    Ok(StableCurve {
        radius,
        powers,
        coeffs,
        samples,
    })
}

/// Boundary data sitting exactly on the transonic center manifold at
/// center coordinate `z0` (useful for constructing clean degenerate
/// profiles).
pub fn boundary_on_center_manifold(params: &DimensionlessParams, z0: f64) -> Result<BoundaryData> {
    let eq = eigen_analysis(params)?;
    let hc = center_manifold_numeric(params, (1.5 * z0.abs()).clamp(0.01, 0.2), 6)?;
    let (ubar, tbar) = eq.from_diagonal(z0, hc.eval(z0));
    BoundaryData::new(ubar - 1.0, tbar + 1.0)
}

/// Boundary data at transverse offset `offset` from the stable manifold at
/// stable coordinate `theta_hat` (positive offsets land on the existence
/// side in the transonic case; `offset = 0` lands on the manifold itself).
pub fn boundary_near_stable_manifold(
    params: &DimensionlessParams,
    theta_hat: f64,
    offset: f64,
) -> Result<BoundaryData> {
    let eq = eigen_analysis(params)?;
    let curve = stable_manifold_from_equilibrium(params, &eq, (1.5 * theta_hat.abs()).clamp(0.01, 0.25))?;
    let u_hat = curve.eval(theta_hat) + offset;
    let (ubar, tbar) = eq.from_diagonal(u_hat, theta_hat);
    BoundaryData::new(ubar - 1.0, tbar + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: f64, mu: f64, kappa: f64) -> DimensionlessParams {
        DimensionlessParams::from_dimensionless(gamma, mu, kappa, 1.0).unwrap()
    }

    #[test]
    fn closed_forms_at_standard_point() {
        let p = params(5.0 / 3.0, 1.0, 1.0);
        let m = manifold_coefficients(&p).unwrap();
        assert!((m.c2 + 15.0 / 169.0).abs() < 1e-15);
        assert!((m.s2 - 2.0 / 507.0).abs() < 1e-15);
        assert!((m.gamma_star - 14.0 / 9.0).abs() < 1e-15);
        assert!(m.c3.is_none() && m.s3.is_none());
        assert!((m.center_orig.linear - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.stable_orig.linear + 1.5).abs() < 1e-15);
    }

    #[test]
    fn gamma_two_thresholds_coincide() {
        let p = params(2.0, 1.0, 1.0);
        let m = manifold_coefficients(&p).unwrap();
        assert!((m.gamma_star - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_transonic() {
        let p = DimensionlessParams::from_dimensionless(5.0 / 3.0, 1.0, 1.0, 2.0).unwrap();
        assert!(manifold_coefficients(&p).is_err());
        assert!(center_manifold_numeric(&p, 0.05, 6).is_err());
    }

    #[test]
    fn center_manifold_tangency_and_fit() {
        let p = params(5.0 / 3.0, 1.0, 1.0);
        let hc = center_manifold_numeric(&p, 0.05, 6).unwrap();
        assert_eq!(hc.eval(0.0), 0.0);
        assert_eq!(hc.eval_deriv(0.0), 0.0);
        let m = manifold_coefficients(&p).unwrap();
        let rel = (hc.quadratic_coefficient() - m.c2).abs() / m.c2.abs();
        assert!(rel < 0.01, "c2 fit off by {rel:.2e}");
        assert!(hc.residual < 1e-8);
    }

    #[test]
    fn center_quadratic_vanishes_at_pr_two() {
        // Tune kappa so that Pr = (mu/kappa)/(gamma-1) = 2.
        let gamma: f64 = 5.0 / 3.0;
        let kappa = 1.0 / (2.0 * (gamma - 1.0));
        let p = params(gamma, 1.0, kappa);
        assert!((p.prandtl - 2.0).abs() < 1e-12);
        let radius: f64 = 0.05;
        let hc = center_manifold_numeric(&p, radius, 7).unwrap();
        // The fitted quadratic coefficient collapses to the radius^2 scale.
        assert!(hc.quadratic_coefficient().abs() < radius * radius);
        let m = manifold_coefficients(&p).unwrap();
        let c3 = m.c3.unwrap();
        assert!(c3 > 0.0);
        let rel = (hc.cubic_coefficient() - c3).abs() / c3;
        assert!(rel < 0.05, "c3 fit off by {rel:.2e}");
    }

    #[test]
    fn stable_curve_matches_closed_form() {
        let p = params(5.0 / 3.0, 1.0, 1.0);
        let curve = stable_manifold_numeric(&p, 0.05).unwrap();
        let m = manifold_coefficients(&p).unwrap();
        assert!(curve.eval(0.0) == 0.0);
        let rel = (curve.quadratic_coefficient() - m.s2).abs() / m.s2.abs();
        assert!(rel < 0.01, "s2 fit off by {rel:.2e}");
        // sign rule: s2 > 0 iff Pr < gamma_star
        assert_eq!(m.s2 > 0.0, p.prandtl < m.gamma_star);
    }

    #[test]
    fn stable_cubic_at_pr_gamma_star() {
        let gamma: f64 = 5.0 / 3.0;
        let gs = 0.5 * (gamma * gamma - gamma + 2.0);
        let kappa = 1.0 / (gs * (gamma - 1.0));
        let p = params(gamma, 1.0, kappa);
        assert!((p.prandtl - gs).abs() < 1e-12);
        let curve = stable_manifold_numeric(&p, 0.05).unwrap();
        let m = manifold_coefficients(&p).unwrap();
        let s3 = m.s3.unwrap();
        assert!(s3 > 0.0);
        let rel = (curve.cubic_coefficient() - s3).abs() / s3;
        assert!(rel < 0.05, "s3 fit off by {rel:.2e}");
    }

    #[test]
    fn stable_manifold_point_contracts_forward() {
        // Forward flow from a manifold point decays like exp(lambda2 x).
        let p = params(5.0 / 3.0, 1.0, 1.0);
        let eq = eigen_analysis(&p).unwrap();
        let curve = stable_manifold_numeric(&p, 0.02).unwrap();
        let theta0 = 1e-3;
        let (ubar, tbar) = eq.from_diagonal(curve.eval(theta0), theta0);
        let start = (ubar * ubar + tbar * tbar).sqrt();
        // Pure relative tolerance: the trajectory decays to ~5e-15 of its
        // start and must stay above the absolute floor to be measurable.
        let opts = Rk45Options {
            abs_tol: 1e-300,
            rel_tol: 1e-10,
            ..Rk45Options::default()
        };
        let mut solver = Rk45::new(|_x, w: &[f64; 2]| rhs_vec(&p, w), opts);
        let out = solver.sample_at(0.0, [ubar, tbar], &[20.0]).unwrap();
        let end = (out[0][0] * out[0][0] + out[0][1] * out[0][1]).sqrt();
        let expected = (eq.lambda2 * 20.0).exp();
        let factor = (end / start) / expected;
        assert!(factor > 0.5 && factor < 2.0, "contraction factor {factor}");
    }
}
