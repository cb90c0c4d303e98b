//! The quadratic forms of the weighted energy machinery and the
//! Poincare-type boundary inequality.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::evolution::Grid;
use crate::model::DimensionlessParams;
use crate::numerics::trapezoid;
use crate::{Error, Result};

/// Closed-form spectral data of the weighted-estimate quadratic forms.
///
/// `F1` and `F4` depend only on `gamma`; `F2` additionally on the Mach
/// number; `F3 = F1/gamma + beta F4/gamma - beta^2 (mu psi^2 + kappa
/// chi^2)/h^2` also needs the viscosities through `h^2 = 4 d/(gamma+1)`.
/// `A2` is the matrix of `F2` at Mach 1; its kernel direction `q1` and
/// nonzero eigenvalues `nu_-, nu_+` are known in closed form, as is the
/// projection `a_hat_11 = q1^T A3 q1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticFormReport {
    pub gamma: f64,
    pub mach: f64,
    pub beta: f64,
    pub mu_hat: f64,
    pub kappa_hat: f64,
    pub a2: Matrix3<f64>,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub q1: Vector3<f64>,
    pub a_hat_11: f64,
    pub h: f64,
}

/// Build the full report. Requires `gamma > 1` and `beta >= 0`.
pub fn quadratic_forms(params: &DimensionlessParams, beta: f64) -> Result<QuadraticFormReport> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
    }
    let g = params.gamma;
    let gm1 = g - 1.0;
    let a2 = Matrix3::new(
        gm1, -gm1, 0.0, //
        -gm1, g * gm1, -gm1, //
        0.0, -gm1, 1.0,
    );
    let inner = g.powi(4) - 4.0 * g.powi(3) + 12.0 * g * g - 20.0 * g + 12.0;
    if inner < 0.0 {
        return Err(Error::Numerical(format!(
            "nu discriminant negative at gamma = {g}"
        )));
    }
    let root = inner.sqrt();
    let nu_minus = 0.5 * (g * g - root);
    let nu_plus = 0.5 * (g * g + root);
    let qbar = (g * g - 2.0 * g + 3.0).powf(-0.5);
    let q1 = Vector3::new(qbar, qbar, gm1 * qbar);
    let a_hat_11 = 0.25 * (g + 1.0) * qbar * qbar * (4.0 + 4.0 * beta - beta * beta);
    let h = (4.0 * params.d / (g + 1.0)).sqrt();
    Ok(QuadraticFormReport {
        gamma: g,
        mach: params.mach,
        beta,
        mu_hat: params.mu_hat,
        kappa_hat: params.kappa_hat,
        a2,
        nu_minus,
        nu_plus,
        q1,
        a_hat_11,
        h,
    })
}

impl QuadraticFormReport {
    /// `F1 = (g-1) phi^2 + 2g psi^2 + chi^2 - 2(g-1) phi psi + 2 psi chi`.
    pub fn f1(&self, phi: f64, psi: f64, chi: f64) -> f64 {
        let gm1 = self.gamma - 1.0;
        gm1 * phi * phi + 2.0 * self.gamma * psi * psi + chi * chi - 2.0 * gm1 * phi * psi
            + 2.0 * psi * chi
    }

    /// Completed-square route for `F1`.
    pub fn f1_squares(&self, phi: f64, psi: f64, chi: f64) -> f64 {
        let gm1 = self.gamma - 1.0;
        gm1 * (phi - psi) * (phi - psi) + (psi + chi) * (psi + chi) + self.gamma * psi * psi
    }

    /// `F2 = (g-1) phi^2 + M^2 g (g-1) psi^2 + chi^2 - 2(g-1)(phi+chi) psi`.
    pub fn f2(&self, phi: f64, psi: f64, chi: f64) -> f64 {
        let gm1 = self.gamma - 1.0;
        let m2 = self.mach * self.mach;
        gm1 * phi * phi + m2 * self.gamma * gm1 * psi * psi + chi * chi
            - 2.0 * gm1 * (phi + chi) * psi
    }

    /// Completed-square route for `F2`; the last square carries the
    /// `M^2 - 1` factor that decides definiteness.
    pub fn f2_squares(&self, phi: f64, psi: f64, chi: f64) -> f64 {
        let g = self.gamma;
        let gm1 = g - 1.0;
        let m2 = self.mach * self.mach;
        gm1 * (phi - psi) * (phi - psi)
            + (gm1 * psi - chi) * (gm1 * psi - chi)
            + g * gm1 * (m2 - 1.0) * psi * psi
    }

    /// `F4 = (3-g) phi^2 + chi^2 + 2(g-1) phi psi + 2 psi chi`.
    pub fn f4(&self, phi: f64, psi: f64, chi: f64) -> f64 {
        let gm1 = self.gamma - 1.0;
        (3.0 - self.gamma) * phi * phi + chi * chi + 2.0 * gm1 * phi * psi + 2.0 * psi * chi
    }

    /// `F3 = F1/g + beta F4/g - beta^2 (mu psi^2 + kappa chi^2)/h^2`.
    pub fn f3(&self, phi: f64, psi: f64, chi: f64) -> f64 {
        let b = self.beta;
        self.f1(phi, psi, chi) / self.gamma + b * self.f4(phi, psi, chi) / self.gamma
            - b * b / (self.h * self.h)
                * (self.mu_hat * psi * psi + self.kappa_hat * chi * chi)
    }

    /// Symmetric matrix of `F1`.
    pub fn f1_matrix(&self) -> Matrix3<f64> {
        let g = self.gamma;
        let gm1 = g - 1.0;
        Matrix3::new(
            gm1, -gm1, 0.0, //
            -gm1, 2.0 * g, 1.0, //
            0.0, 1.0, 1.0,
        )
    }

    /// Symmetric matrix of `F2` at the report's Mach number.
    pub fn f2_matrix(&self) -> Matrix3<f64> {
        let g = self.gamma;
        let gm1 = g - 1.0;
        let m2 = self.mach * self.mach;
        Matrix3::new(
            gm1, -gm1, 0.0, //
            -gm1, m2 * g * gm1, -gm1, //
            0.0, -gm1, 1.0,
        )
    }

    /// Symmetric matrix of `F3` at the report's `beta`.
    pub fn f3_matrix(&self) -> Matrix3<f64> {
        let g = self.gamma;
        let gm1 = g - 1.0;
        let b = self.beta;
        let h2 = self.h * self.h;
        let mut m = Matrix3::zeros();
        // F1/g part
        m[(0, 0)] += gm1 / g;
        m[(1, 1)] += 2.0;
        m[(2, 2)] += 1.0 / g;
        m[(0, 1)] -= gm1 / g;
        m[(1, 0)] -= gm1 / g;
        m[(1, 2)] += 1.0 / g;
        m[(2, 1)] += 1.0 / g;
        // beta F4 / g part
        m[(0, 0)] += b * (3.0 - g) / g;
        m[(2, 2)] += b / g;
        m[(0, 1)] += b * gm1 / g;
        m[(1, 0)] += b * gm1 / g;
        m[(1, 2)] += b / g;
        m[(2, 1)] += b / g;
        // -beta^2 (mu psi^2 + kappa chi^2)/h^2
        m[(1, 1)] -= b * b * self.mu_hat / h2;
        m[(2, 2)] -= b * b * self.kappa_hat / h2;
        m
    }

    /// Eigenvalues of `A2` from a numeric symmetric eigensolve, ascending.
    /// Serves as the independent check of the closed forms `0, nu_-, nu_+`.
    pub fn a2_numeric_eigenvalues(&self) -> [f64; 3] {
        let eig = nalgebra::SymmetricEigen::new(self.a2);
        let mut vals = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    /// Orthonormal eigenvectors of `A2` ordered by ascending eigenvalue
    /// (so the first column spans the kernel).
    pub fn a2_numeric_eigenvectors(&self) -> [Vector3<f64>; 3] {
        let eig = nalgebra::SymmetricEigen::new(self.a2);
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        [
            eig.eigenvectors.column(idx[0]).into_owned(),
            eig.eigenvectors.column(idx[1]).into_owned(),
            eig.eigenvectors.column(idx[2]).into_owned(),
        ]
    }

    /// Numeric route to `a_hat_11`: project the `F3` matrix on `q1`.
    pub fn a_hat_11_numeric(&self) -> f64 {
        (self.q1.transpose() * self.f3_matrix() * self.q1)[(0, 0)]
    }

    /// Smallest eigenvalue of a symmetric 3x3 matrix.
    pub fn min_eigenvalue(m: &Matrix3<f64>) -> f64 {
        let eig = nalgebra::SymmetricEigen::new(*m);
        eig.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Verification record of the Poincare-type inequality
/// `int |w f^2| <= C ||w||_{L1_1} (f(0)^2 + ||f_x||^2)` with the explicit
/// constant `C = 2`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PoincareReport {
    pub lhs: f64,
    pub rhs: f64,
    pub w_weighted_l1: f64,
    pub pass: bool,
}

/// Check the inequality on sampled data. The derivative energy uses the
/// piecewise-linear interpolant of `f` (exact slopes), the weight integrals
/// use the trapezoid rule.
pub fn poincare_check(w: &[f64], f: &[f64], grid: &Grid) -> Result<PoincareReport> {
    if w.len() != grid.n || f.len() != grid.n {
        return Err(Error::GridMismatch(
            "poincare check needs w and f on the grid".into(),
        ));
    }
    let dx = grid.dx();
    let xs = grid.xs();
    let lhs_integrand: Vec<f64> = w.iter().zip(f).map(|(wi, fi)| (wi * fi * fi).abs()).collect();
    let lhs = trapezoid(&lhs_integrand, dx);
    let w_l1_integrand: Vec<f64> = w.iter().zip(&xs).map(|(wi, &x)| (1.0 + x) * wi.abs()).collect();
    let w_weighted_l1 = trapezoid(&w_l1_integrand, dx);
    let mut fx_energy = 0.0;
    for pair in f.windows(2) {
        let slope = (pair[1] - pair[0]) / dx;
        fx_energy += slope * slope * dx;
    }
    let rhs = 2.0 * w_weighted_l1 * (f[0] * f[0] + fx_energy);
    Ok(PoincareReport {
        lhs,
        rhs,
        w_weighted_l1,
        pass: lhs <= rhs * (1.0 + 1e-12),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(gamma: f64, mach: f64, beta: f64) -> QuadraticFormReport {
        let p = DimensionlessParams::from_dimensionless(gamma, 1.0, 1.0, mach).unwrap();
        quadratic_forms(&p, beta).unwrap()
    }

    #[test]
    fn f1_value_and_squares_agree() {
        let r = report(5.0 / 3.0, 1.0, 0.0);
        let v = r.f1(1.0, 1.0, 0.0);
        assert!((v - 8.0 / 3.0).abs() < 1e-14);
        assert!((r.f1_squares(1.0, 1.0, 0.0) - v).abs() < 1e-14);
        // random samples
        for k in 0..100 {
            let phi = (k as f64 * 0.37).sin();
            let psi = (k as f64 * 0.91).cos();
            let chi = (k as f64 * 1.3).sin() * 0.5;
            assert!((r.f1(phi, psi, chi) - r.f1_squares(phi, psi, chi)).abs() < 1e-12);
            assert!((r.f2(phi, psi, chi) - r.f2_squares(phi, psi, chi)).abs() < 1e-12);
        }
    }

    #[test]
    fn nu_closed_forms_match_numeric_eigensolve() {
        let r = report(5.0 / 3.0, 1.0, 0.0);
        assert!((r.nu_minus - 0.8417301221224394).abs() < 1e-12);
        assert!((r.nu_plus - 1.9360476556553388).abs() < 1e-12);
        let vals = r.a2_numeric_eigenvalues();
        assert!(vals[0].abs() < 1e-12);
        assert!((vals[1] - r.nu_minus).abs() < 1e-10);
        assert!((vals[2] - r.nu_plus).abs() < 1e-10);
        assert!(0.0 < r.nu_minus && r.nu_minus < r.nu_plus);
    }

    #[test]
    fn a2_kernel_and_orthonormality() {
        for gamma in [1.2, 1.4, 5.0 / 3.0, 2.0, 3.0] {
            let r = report(gamma, 1.0, 0.0);
            assert!((r.a2 * r.q1).norm() < 1e-12);
            assert!((r.q1.norm() - 1.0).abs() < 1e-14);
            let qs = r.a2_numeric_eigenvectors();
            for i in 0..3 {
                for j in 0..3 {
                    let dot = qs[i].dot(&qs[j]);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn a_hat_11_closed_form_and_sign_change() {
        let r = report(5.0 / 3.0, 1.0, 2.0);
        assert!((r.a_hat_11 - 24.0 / 11.0).abs() < 1e-13);
        assert!((r.a_hat_11_numeric() - r.a_hat_11).abs() < 1e-12);
        // positivity iff beta < 2 + 2 sqrt(2)
        let root = 2.0 + 2.0 * 2f64.sqrt();
        let lo = report(5.0 / 3.0, 1.0, root - 1e-4);
        let hi = report(5.0 / 3.0, 1.0, root + 1e-4);
        assert!(lo.a_hat_11 > 0.0 && hi.a_hat_11 < 0.0);
    }

    #[test]
    fn f2_definite_iff_supersonic() {
        for gamma in [1.2, 1.4, 5.0 / 3.0, 2.0, 3.0] {
            for mach in [0.5, 0.8, 1.0, 1.2, 2.0, 3.0] {
                let r = report(gamma, mach, 0.0);
                let min = QuadraticFormReport::min_eigenvalue(&r.f2_matrix());
                if mach > 1.0 {
                    assert!(min > 0.0, "gamma={gamma} mach={mach}: min {min}");
                } else {
                    assert!(min <= 1e-12, "gamma={gamma} mach={mach}: min {min}");
                }
                let min1 = QuadraticFormReport::min_eigenvalue(&r.f1_matrix());
                assert!(min1 > 0.0, "F1 must be definite for gamma > 1");
            }
        }
    }

    #[test]
    fn poincare_examples() {
        let g = Grid::new(60.0, 6001).unwrap();
        let zeros = vec![0.0; g.n];
        let w: Vec<f64> = g.xs().iter().map(|x| (-x).exp()).collect();
        let rep = poincare_check(&w, &zeros, &g).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.pass);
        // w = e^{-x}, f = 1: lhs = 1, ||w||_{L1_1} = 2, rhs = 4
        let ones = vec![1.0; g.n];
        let rep = poincare_check(&w, &ones, &g).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-3);
        assert!((rep.w_weighted_l1 - 2.0).abs() < 1e-3);
        assert!((rep.rhs - 4.0).abs() < 1e-2);
        assert!(rep.pass);
    }
}
