//! Measurable objects of the stability analysis: the perturbation fields,
//! the convex energy form, weighted norms, the composite norm functionals,
//! the quadratic-form suite, and decay-rate fitting.

mod forms;
mod rates;

pub use forms::{poincare_check, quadratic_forms, PoincareReport, QuadraticFormReport};
pub use rates::{fit_rate, RateFit, RateModel};

use serde::{Deserialize, Serialize};

use crate::evolution::{EvolutionState, Grid};
use crate::model::DimensionlessParams;
use crate::numerics::{derivative, second_derivative, trapezoid};
use crate::stationary::StationaryProfile;
use crate::{Error, Result};

/// The perturbation fields `(phi, psi, chi) = (rho, u, theta) - profile`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Perturbation {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub chi: Vec<f64>,
}

impl Perturbation {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            worst = worst
                .max(self.phi[i].abs())
                .max(self.psi[i].abs())
                .max(self.chi[i].abs());
        }
        worst
    }

    /// Compute the perturbation against explicit reference arrays (used
    /// when the reference is a relaxed discrete steady state rather than an
    /// ODE profile).
    pub fn from_reference(
        state: &EvolutionState,
        rho: &[f64],
        u: &[f64],
        theta: &[f64],
    ) -> Result<Self> {
        if state.len() != rho.len() {
            return Err(Error::GridMismatch(format!(
                "state has {} nodes, reference {}",
                state.len(),
                rho.len()
            )));
        }
        let n = state.len();
        let mut p = Perturbation {
            phi: Vec::with_capacity(n),
            psi: Vec::with_capacity(n),
            chi: Vec::with_capacity(n),
        };
        for i in 0..n {
            p.phi.push(state.rho[i] - rho[i]);
            p.psi.push(state.u[i] - u[i]);
            p.chi.push(state.theta[i] - theta[i]);
        }
        Ok(p)
    }
}

/// Componentwise difference of a state and a stationary profile on the same
/// grid, with the wall compatibility `psi(0) = chi(0) = 0` verified.
pub fn perturbation(state: &EvolutionState, profile: &StationaryProfile) -> Result<Perturbation> {
    if state.len() != profile.len() {
        return Err(Error::GridMismatch(format!(
            "state has {} nodes, profile {}",
            state.len(),
            profile.len()
        )));
    }
    let p = Perturbation::from_reference(state, &profile.rho, &profile.u, &profile.theta)?;
    if p.psi[0].abs() > 1e-4 || p.chi[0].abs() > 1e-4 {
        return Err(Error::Domain(format!(
            "perturbation does not vanish at the wall: psi(0) = {:.3e}, chi(0) = {:.3e}",
            p.psi[0], p.chi[0]
        )));
    }
    Ok(p)
}

/// The convex entropy-like function `omega(s) = s - 1 - log s`.
pub fn omega(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("omega requires s > 0, got {s}")));
    }
    Ok(s - 1.0 - s.ln())
}

/// Pointwise energy form and its density-weighted integral,
/// `E = theta~ omega(rho~/rho)/(M^2 gamma) + psi^2/2
///    + cv_hat theta~ omega(theta/theta~)/M^2`.
pub fn energy_form(
    state: &EvolutionState,
    profile: &StationaryProfile,
    params: &DimensionlessParams,
) -> Result<(Vec<f64>, f64)> {
    let dx = if profile.len() > 1 {
        profile.x[1] - profile.x[0]
    } else {
        0.0
    };
    energy_form_from_reference(state, &profile.rho, &profile.u, &profile.theta, dx, params)
}

/// Energy form against explicit reference fields.
pub fn energy_form_from_reference(
    state: &EvolutionState,
    rho: &[f64],
    u: &[f64],
    theta: &[f64],
    dx: f64,
    params: &DimensionlessParams,
) -> Result<(Vec<f64>, f64)> {
    if state.len() != rho.len() {
        return Err(Error::GridMismatch(
            "energy form needs state and reference on one grid".into(),
        ));
    }
    let m2 = params.mach * params.mach;
    let n = state.len();
    let mut pointwise = Vec::with_capacity(n);
    let mut weighted = Vec::with_capacity(n);
    for i in 0..n {
        let psi = state.u[i] - u[i];
        let e = theta[i] * omega(rho[i] / state.rho[i])? / (m2 * params.gamma)
            + 0.5 * psi * psi
            + params.cv_hat * theta[i] * omega(state.theta[i] / theta[i])? / m2;
        pointwise.push(e);
        weighted.push(state.rho[i] * e);
    }
    let integral = trapezoid(&weighted, dx);
    Ok((pointwise, integral))
}

/// Weight families for the spatially weighted L2 norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    /// `(1 + x)^alpha`
    Plain { alpha: f64 },
    /// `(1 + delta x)^alpha`
    DeltaScaled { alpha: f64, delta: f64 },
    /// `exp(zeta x)`
    Exponential { zeta: f64 },
}

impl NormKind {
    pub fn weight(&self, x: f64) -> f64 {
        match *self {
            NormKind::Plain { alpha } => (1.0 + x).powf(alpha),
            NormKind::DeltaScaled { alpha, delta } => (1.0 + delta * x).powf(alpha),
            NormKind::Exponential { zeta } => (zeta * x).exp(),
        }
    }
}

/// A weighted norm specification: weight family plus derivative order
/// (0 for L2-style, 1 adds the first-derivative term, H1-style).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    pub derivative_order: u8,
}

/// Trapezoid evaluation of the weighted norm of one or more fields,
/// `sqrt( sum_fields integral w(x) (f^2 [+ f_x^2]) dx )`.
pub fn weighted_norm(fields: &[&[f64]], spec: &NormSpec, grid: &Grid) -> f64 {
    let dx = grid.dx();
    let xs = grid.xs();
    let mut total = 0.0;
    for f in fields {
        let mut integrand: Vec<f64> = f
            .iter()
            .zip(&xs)
            .map(|(v, &x)| spec.kind.weight(x) * v * v)
            .collect();
        if spec.derivative_order >= 1 {
            let fx = derivative(f, dx);
            for (acc, (v, &x)) in integrand.iter_mut().zip(fx.iter().zip(&xs)) {
                *acc += spec.kind.weight(x) * v * v;
            }
        }
        total += trapezoid(&integrand, dx);
    }
    total.sqrt()
}

/// Every composite norm of the analysis evaluated on one snapshot.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CompositeNorms {
    pub sup: f64,
    pub l2: f64,
    pub l2_alpha: f64,
    /// H1 norm of the perturbation; its running supremum is the analysis'
    /// `N(t)`.
    pub h1: f64,
    /// Boundary values entering the dissipative norms.
    pub phi_wall: f64,
    pub phi_x_wall: f64,
    /// `D^2 = |(phi, phi_x)(0)|^2 + ||phi_x||^2 + ||(psi_x, chi_x)||_{H1}^2`
    pub d: f64,
    /// `D~^2 = D^2 + delta^2 |||Phi|||_{-2}^2`
    pub d_tilde: f64,
    /// `E_alpha^2 = ||Phi||_{H1}^2 + ||Phi||_{L2_alpha}^2`
    pub e_alpha: f64,
    /// `D_alpha^2 = D^2 + alpha ||Phi||_{L2_{alpha-1}}^2
    ///            + ||(psi_x, chi_x)||_{L2_alpha}^2`
    pub d_alpha: f64,
    /// `E~_alpha`: delta-scaled H1 norm of the perturbation.
    pub e_tilde_alpha: f64,
    /// `D~_alpha^2` with delta-scaled weights.
    pub d_tilde_alpha: f64,
}

/// Assemble the composite norms exactly as the analysis defines them.
/// Boundary derivatives use a second-order one-sided stencil.
pub fn composite_norms(
    pert: &Perturbation,
    grid: &Grid,
    alpha: f64,
    delta: f64,
) -> Result<CompositeNorms> {
    if pert.len() != grid.n {
        return Err(Error::GridMismatch(format!(
            "perturbation has {} nodes, grid {}",
            pert.len(),
            grid.n
        )));
    }
    let dx = grid.dx();
    let phi_x = derivative(&pert.phi, dx);
    let psi_x = derivative(&pert.psi, dx);
    let chi_x = derivative(&pert.chi, dx);
    let psi_xx = second_derivative(&pert.psi, dx);
    let chi_xx = second_derivative(&pert.chi, dx);

    let l2spec = NormSpec {
        kind: NormKind::Plain { alpha: 0.0 },
        derivative_order: 0,
    };
    let alpha_spec = NormSpec {
        kind: NormKind::Plain { alpha },
        derivative_order: 0,
    };
    let alpha_m1_spec = NormSpec {
        kind: NormKind::Plain { alpha: alpha - 1.0 },
        derivative_order: 0,
    };
    let dsc = |a: f64| NormSpec {
        kind: NormKind::DeltaScaled { alpha: a, delta },
        derivative_order: 0,
    };

    let sup = pert.sup_norm();
    let l2 = weighted_norm(&[&pert.phi, &pert.psi, &pert.chi], &l2spec, grid);
    let grad_l2 = weighted_norm(&[&phi_x, &psi_x, &chi_x], &l2spec, grid);
    let h1 = (l2 * l2 + grad_l2 * grad_l2).sqrt();
    let l2_alpha = weighted_norm(&[&pert.phi, &pert.psi, &pert.chi], &alpha_spec, grid);

    let phi_wall = pert.phi[0];
    let phi_x_wall = phi_x[0];
    let phi_x_l2 = weighted_norm(&[&phi_x], &l2spec, grid);
    let grad2_l2 = weighted_norm(&[&psi_x, &chi_x], &l2spec, grid);
    let grad2_h1_extra = weighted_norm(&[&psi_xx, &chi_xx], &l2spec, grid);
    let d2 = phi_wall * phi_wall
        + phi_x_wall * phi_x_wall
        + phi_x_l2 * phi_x_l2
        + grad2_l2 * grad2_l2
        + grad2_h1_extra * grad2_h1_extra;

    let phi_minus2 = weighted_norm(&[&pert.phi, &pert.psi, &pert.chi], &dsc(-2.0), grid);
    let d_tilde2 = d2 + delta * delta * phi_minus2 * phi_minus2;

    let e_alpha2 = h1 * h1 + l2_alpha * l2_alpha;
    let phi_alpha_m1 = weighted_norm(&[&pert.phi, &pert.psi, &pert.chi], &alpha_m1_spec, grid);
    let grad2_alpha = weighted_norm(&[&psi_x, &chi_x], &alpha_spec, grid);
    let d_alpha2 = d2 + alpha * phi_alpha_m1 * phi_alpha_m1 + grad2_alpha * grad2_alpha;

    let phi_ds_alpha = weighted_norm(&[&pert.phi, &pert.psi, &pert.chi], &dsc(alpha), grid);
    let grad_ds_alpha = weighted_norm(&[&phi_x, &psi_x, &chi_x], &dsc(alpha), grid);
    let e_tilde_alpha = (phi_ds_alpha * phi_ds_alpha + grad_ds_alpha * grad_ds_alpha).sqrt();

    let phi_ds_am2 = weighted_norm(&[&pert.phi, &pert.psi, &pert.chi], &dsc(alpha - 2.0), grid);
    let phix_ds_alpha = weighted_norm(&[&phi_x], &dsc(alpha), grid);
    let grad2_ds_alpha = weighted_norm(&[&psi_x, &chi_x], &dsc(alpha), grid);
    let grad2_ds_alpha_xx = weighted_norm(&[&psi_xx, &chi_xx], &dsc(alpha), grid);
    let d_tilde_alpha2 = phi_wall * phi_wall
        + phi_x_wall * phi_x_wall
        + delta * delta * phi_ds_am2 * phi_ds_am2
        + phix_ds_alpha * phix_ds_alpha
        + grad2_ds_alpha * grad2_ds_alpha
        + grad2_ds_alpha_xx * grad2_ds_alpha_xx;

    Ok(CompositeNorms {
        sup,
        l2,
        l2_alpha,
        h1,
        phi_wall,
        phi_x_wall,
        d: d2.sqrt(),
        d_tilde: d_tilde2.sqrt(),
        e_alpha: e_alpha2.sqrt(),
        d_alpha: d_alpha2.sqrt(),
        e_tilde_alpha,
        d_tilde_alpha: d_tilde_alpha2.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(20.0, 401).unwrap()
    }

    fn zero_pert(n: usize) -> Perturbation {
        Perturbation {
            phi: vec![0.0; n],
            psi: vec![0.0; n],
            chi: vec![0.0; n],
        }
    }

    #[test]
    fn omega_values() {
        assert_eq!(omega(1.0).unwrap(), 0.0);
        assert!((omega(2.0).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!((omega(0.5).unwrap() - (2f64.ln() - 0.5)).abs() < 1e-15);
        assert!(omega(0.0).is_err());
        assert!(omega(-1.0).is_err());
    }

    #[test]
    fn omega_quadratic_minorant() {
        // omega(s) >= (s-1)^2 / (2 max(1,s)^2) on [0.5, 2]
        for k in 0..=150 {
            let s = 0.5 + 1.5 * k as f64 / 150.0;
            let w = omega(s).unwrap();
            let minorant = 0.5 * (s - 1.0) * (s - 1.0) / s.max(1.0).powi(2);
            assert!(w + 1e-15 >= minorant, "s = {s}: {w} < {minorant}");
        }
    }

    #[test]
    fn weighted_norm_basics() {
        let g = Grid::new(20.0, 8001).unwrap();
        let zeros = vec![0.0; g.n];
        let spec = NormSpec {
            kind: NormKind::Plain { alpha: 0.0 },
            derivative_order: 0,
        };
        assert_eq!(weighted_norm(&[&zeros], &spec, &g), 0.0);
        // Plain(0) equals the unweighted L2 norm
        let f: Vec<f64> = g.xs().iter().map(|x| (-x).exp()).collect();
        let n0 = weighted_norm(&[&f], &spec, &g);
        let exact = (0.5f64 * (1.0 - (-40.0f64).exp())).sqrt();
        assert!((n0 - exact).abs() < 1e-6);
    }

    #[test]
    fn weighted_norm_quadrature_refines_at_second_order() {
        let spec = NormSpec {
            kind: NormKind::Plain { alpha: 2.0 },
            derivative_order: 0,
        };
        let norm_with = |n: usize| {
            let g = Grid::new(10.0, n).unwrap();
            let f: Vec<f64> = g.xs().iter().map(|x| (-x).exp() * (1.0 + x)).collect();
            weighted_norm(&[&f], &spec, &g)
        };
        let fine = norm_with(3201);
        let e1 = (norm_with(101) - fine).abs();
        let e2 = (norm_with(201) - fine).abs();
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "quadrature order {order}");
    }

    #[test]
    fn algebraic_tail_membership_threshold() {
        // f = (1+x)^{-1.6}: the alpha = 2 norm converges as the domain
        // grows (alpha < 2r - 1 = 2.2, shrinking increments) while the
        // alpha = 2.4 norm diverges (growing increments).
        let sq_norm = |x_max: f64, alpha: f64| {
            let spec = NormSpec {
                kind: NormKind::Plain { alpha },
                derivative_order: 0,
            };
            let g = Grid::new(x_max, (x_max as usize) * 4 + 1).unwrap();
            let f: Vec<f64> = g.xs().iter().map(|x| (1.0 + x).powf(-1.6)).collect();
            let n = weighted_norm(&[&f], &spec, &g);
            n * n
        };
        for (alpha, divergent) in [(2.0, false), (2.4, true)] {
            let inc1 = sq_norm(400.0, alpha) - sq_norm(200.0, alpha);
            let inc2 = sq_norm(800.0, alpha) - sq_norm(400.0, alpha);
            if divergent {
                assert!(inc2 > inc1, "alpha={alpha}: increments must grow");
            } else {
                assert!(inc2 < 0.9 * inc1, "alpha={alpha}: increments must shrink");
            }
        }
    }

    #[test]
    fn energy_form_cases() {
        use crate::evolution::EvolutionState;
        let g = grid();
        let params = DimensionlessParams::from_dimensionless(5.0 / 3.0, 1.0, 1.0, 2.0).unwrap();
        let (r, u, th) = (vec![1.0; g.n], vec![-1.0; g.n], vec![1.0; g.n]);
        let mut state = EvolutionState::constant_far_field(&g);
        // zero perturbation
        let (pw, total) =
            energy_form_from_reference(&state, &r, &u, &th, g.dx(), &params).unwrap();
        assert!(pw.iter().all(|&e| e == 0.0));
        assert_eq!(total, 0.0);
        // psi-only perturbation: E = psi^2 / 2 exactly
        for (i, x) in g.xs().iter().enumerate() {
            state.u[i] += 0.01 * (-(x - 5.0) * (x - 5.0)).exp();
        }
        let (pw, _) = energy_form_from_reference(&state, &r, &u, &th, g.dx(), &params).unwrap();
        for (i, &e) in pw.iter().enumerate() {
            let psi = state.u[i] + 1.0;
            assert!((e - 0.5 * psi * psi).abs() < 1e-18);
        }
    }

    #[test]
    fn energy_equivalence_band_over_amplitudes() {
        // The ratio (int rho E) / (int |Phi|^2) stays inside a fixed band
        // while the amplitude scans two decades.
        use crate::evolution::EvolutionState;
        let g = grid();
        let params = DimensionlessParams::from_dimensionless(5.0 / 3.0, 1.0, 1.0, 2.0).unwrap();
        let (r, u, th) = (vec![1.0; g.n], vec![-1.0; g.n], vec![1.0; g.n]);
        let mut ratios = Vec::new();
        for k in 0..=8 {
            let a = 1e-4 * 10f64.powf(k as f64 / 4.0);
            let mut state = EvolutionState::constant_far_field(&g);
            for (i, x) in g.xs().iter().enumerate() {
                let bump = a * (-(x - 8.0) * (x - 8.0) / 4.0).exp();
                state.rho[i] += bump;
                state.u[i] += 0.7 * bump;
                state.theta[i] += 0.4 * bump;
            }
            let (_, total) =
                energy_form_from_reference(&state, &r, &u, &th, g.dx(), &params).unwrap();
            let p = Perturbation::from_reference(&state, &r, &u, &th).unwrap();
            let sq: Vec<f64> = (0..g.n)
                .map(|i| p.phi[i].powi(2) + p.psi[i].powi(2) + p.chi[i].powi(2))
                .collect();
            let l2sq = trapezoid(&sq, g.dx());
            ratios.push(total / l2sq);
        }
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo > 0.0);
        assert!(hi / lo < 1.5, "equivalence band too wide: [{lo}, {hi}]");
    }

    #[test]
    fn composite_norms_zero_and_consistency() {
        let g = grid();
        let z = zero_pert(g.n);
        let norms = composite_norms(&z, &g, 2.0, 0.1).unwrap();
        assert_eq!(norms.sup, 0.0);
        assert_eq!(norms.d, 0.0);
        assert_eq!(norms.e_alpha, 0.0);

        // E_alpha^2 = H1^2 + L2_alpha^2 cross-checked against direct calls
        let mut p = zero_pert(g.n);
        for (i, x) in g.xs().iter().enumerate() {
            p.phi[i] = (-0.3 * x).exp();
            p.psi[i] = x * (-0.5 * x).exp();
            p.chi[i] = (-0.2 * x).exp() * (1.0 + x).recip();
        }
        let norms = composite_norms(&p, &g, 2.0, 0.1).unwrap();
        let recomputed = (norms.h1 * norms.h1 + norms.l2_alpha * norms.l2_alpha).sqrt();
        assert!((norms.e_alpha - recomputed).abs() < 1e-12);
        // D >= |phi(0)|
        assert!(norms.d * norms.d + 1e-15 >= p.phi[0] * p.phi[0]);
        assert!(norms.d_tilde >= norms.d);
    }
}
