//! Nondimensionalization of a physical gas configuration.
//!
//! Everything downstream of this module is parameterized by the four
//! dimensionless constants `(gamma, mu_hat, kappa_hat, mach)`; physical
//! quantities appear only at this ingestion boundary. In dimensionless
//! variables the far field is always `(rho, u, theta) = (1, -1, 1)` and the
//! pressure is `p = rho * theta / gamma`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mach band inside which the flow counts as transonic. The exact
/// trichotomy of the analysis needs a tolerance in floating point.
pub const DEFAULT_TRANSONIC_TOL: f64 = 1e-9;

/// An ideal polytropic gas: `p = R rho theta`, `c_v = R/(gamma-1)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicalGas {
    pub gas_constant: f64,
    pub gamma: f64,
    pub viscosity: f64,
    pub conductivity: f64,
}

impl PhysicalGas {
    pub fn new(gas_constant: f64, gamma: f64, viscosity: f64, conductivity: f64) -> Result<Self> {
        if !(gas_constant > 0.0) {
            return Err(Error::Domain("gas constant R must be positive".into()));
        }
        if !(gamma > 1.0) {
            return Err(Error::Domain("gamma must exceed 1".into()));
        }
        if !(viscosity > 0.0) {
            return Err(Error::Domain("viscosity mu must be positive".into()));
        }
        if !(conductivity > 0.0) {
            return Err(Error::Domain("conductivity kappa must be positive".into()));
        }
        Ok(Self {
            gas_constant,
            gamma,
            viscosity,
            conductivity,
        })
    }

    /// Specific heat at constant volume, `R/(gamma-1)`.
    pub fn cv(&self) -> f64 {
        self.gas_constant / (self.gamma - 1.0)
    }

    /// Specific heat at constant pressure, `gamma * c_v`.
    pub fn cp(&self) -> f64 {
        self.gamma * self.cv()
    }

    /// Prandtl number `mu c_p / kappa` from the physical constants.
    pub fn prandtl(&self) -> f64 {
        self.viscosity * self.cp() / self.conductivity
    }
}

/// The spatial asymptotic state `(rho_+, u_+, theta_+)`. Outflow requires
/// `u_+ < 0`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FarField {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
}

impl FarField {
    pub fn new(rho: f64, u: f64, theta: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Domain("far-field density must be positive".into()));
        }
        if !(u < 0.0) {
            return Err(Error::Domain(
                "far-field velocity must be negative (outflow)".into(),
            ));
        }
        if !(theta > 0.0) {
            return Err(Error::Domain(
                "far-field temperature must be positive".into(),
            ));
        }
        Ok(Self { rho, u, theta })
    }
}

/// Flow regime of the far-field equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowRegime {
    Supersonic,
    Transonic,
    Subsonic,
}

impl FlowRegime {
    pub fn classify(mach: f64, transonic_tol: f64) -> Self {
        if (mach - 1.0).abs() <= transonic_tol {
            FlowRegime::Transonic
        } else if mach > 1.0 {
            FlowRegime::Supersonic
        } else {
            FlowRegime::Subsonic
        }
    }
}

impl std::fmt::Display for FlowRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FlowRegime::Supersonic => "supersonic",
            FlowRegime::Transonic => "transonic",
            FlowRegime::Subsonic => "subsonic",
        };
        f.write_str(s)
    }
}

/// Every derived constant the stationary and evolution modules consume.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DimensionlessParams {
    pub gamma: f64,
    /// `mu / (rho_+ |u_+|^2)`
    pub mu_hat: f64,
    /// `kappa theta_+ / (rho_+ |u_+|^4)`
    pub kappa_hat: f64,
    /// `1 / (gamma (gamma - 1))`
    pub cv_hat: f64,
    /// `|u_+| / sqrt(R gamma theta_+)`
    pub mach: f64,
    /// `(mu_hat / kappa_hat) / (mach^2 (gamma - 1))`
    pub prandtl: f64,
    /// `mu_hat + kappa_hat (gamma - 1)^2`
    pub d: f64,
    /// Length scale of the nondimensionalization, `|u_+|`.
    pub scale_l: f64,
    /// Time scale of the nondimensionalization.
    pub scale_t: f64,
    pub transonic_tol: f64,
}

impl DimensionlessParams {
    /// Build directly from the dimensionless constants.
    pub fn from_dimensionless(gamma: f64, mu_hat: f64, kappa_hat: f64, mach: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::Domain("gamma must exceed 1".into()));
        }
        if !(mu_hat > 0.0) {
            return Err(Error::Domain("mu_hat must be positive".into()));
        }
        if !(kappa_hat > 0.0) {
            return Err(Error::Domain("kappa_hat must be positive".into()));
        }
        if !(mach > 0.0) {
            return Err(Error::Domain("mach number must be positive".into()));
        }
        let cv_hat = 1.0 / (gamma * (gamma - 1.0));
        let prandtl = (mu_hat / kappa_hat) / (mach * mach * (gamma - 1.0));
        let d = mu_hat + kappa_hat * (gamma - 1.0) * (gamma - 1.0);
        Ok(Self {
            gamma,
            mu_hat,
            kappa_hat,
            cv_hat,
            mach,
            prandtl,
            d,
            scale_l: 1.0,
            scale_t: 1.0,
            transonic_tol: DEFAULT_TRANSONIC_TOL,
        })
    }

    pub fn regime(&self) -> FlowRegime {
        FlowRegime::classify(self.mach, self.transonic_tol)
    }

    /// Threshold Prandtl number `gamma_* = (gamma^2 - gamma + 2)/2` that
    /// controls the curvature sign of the stable manifold.
    pub fn gamma_star(&self) -> f64 {
        0.5 * (self.gamma * self.gamma - self.gamma + 2.0)
    }

    pub fn with_transonic_tol(mut self, tol: f64) -> Self {
        self.transonic_tol = tol;
        self
    }
}

/// Mach number of the far-field state, `|u_+| / c_+` with
/// `c_+ = sqrt(R gamma theta_+)`.
pub fn mach_number(gas: &PhysicalGas, far: &FarField) -> Result<f64> {
    if !(far.theta > 0.0) {
        return Err(Error::Domain(
            "far-field temperature must be positive".into(),
        ));
    }
    let sound = (gas.gas_constant * gas.gamma * far.theta).sqrt();
    Ok(far.u.abs() / sound)
}

/// Nondimensionalize a physical configuration. The far field maps to
/// `(1, -1, 1)` under the induced scaling.
pub fn nondimensionalize(gas: &PhysicalGas, far: &FarField) -> Result<DimensionlessParams> {
    // Re-validate: the structs may have been built from deserialized data.
    let gas = PhysicalGas::new(gas.gas_constant, gas.gamma, gas.viscosity, gas.conductivity)?;
    let far = FarField::new(far.rho, far.u, far.theta)?;
    let u2 = far.u * far.u;
    let mu_hat = gas.viscosity / (far.rho * u2);
    let kappa_hat = gas.conductivity * far.theta / (far.rho * u2 * u2);
    let mach = mach_number(&gas, &far)?;
    let mut p = DimensionlessParams::from_dimensionless(gas.gamma, mu_hat, kappa_hat, mach)?;
    p.scale_l = far.u.abs();
    p.scale_t = 1.0;
    Ok(p)
}

/// Boundary strength `delta = |(u_b + 1, theta_b - 1)|`.
pub fn boundary_strength(u_b: f64, theta_b: f64) -> Result<f64> {
    if !(u_b < 0.0) {
        return Err(Error::Domain(
            "boundary velocity u_b must be negative (outflow)".into(),
        ));
    }
    if !(theta_b > 0.0) {
        return Err(Error::Domain(
            "boundary temperature theta_b must be positive".into(),
        ));
    }
    Ok(((u_b + 1.0) * (u_b + 1.0) + (theta_b - 1.0) * (theta_b - 1.0)).sqrt())
}

/// Dimensionless boundary data for the outflow problem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryData {
    pub u_b: f64,
    pub theta_b: f64,
    /// `|(u_b + 1, theta_b - 1)|`
    pub delta: f64,
}

impl BoundaryData {
    pub fn new(u_b: f64, theta_b: f64) -> Result<Self> {
        let delta = boundary_strength(u_b, theta_b)?;
        Ok(Self { u_b, theta_b, delta })
    }

    /// Boundary data coinciding with the far field (`delta = 0`).
    pub fn far_field() -> Self {
        Self {
            u_b: -1.0,
            theta_b: 1.0,
            delta: 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_far_field_nondimensionalizes_to_unity() {
        let gas = PhysicalGas::new(0.5, 2.0, 1.0, 1.0).unwrap();
        let far = FarField::new(1.0, -1.0, 1.0).unwrap();
        let p = nondimensionalize(&gas, &far).unwrap();
        assert!(close(p.mach, 1.0, 1e-15));
        assert!(close(p.mu_hat, 1.0, 1e-15));
        assert!(close(p.kappa_hat, 1.0, 1e-15));
        assert!(close(p.cv_hat, 0.5, 1e-15));
    }

    #[test]
    fn direct_dimensionless_path() {
        let p = DimensionlessParams::from_dimensionless(5.0 / 3.0, 1.0, 1.0, 1.0).unwrap();
        assert!(close(p.cv_hat, 0.9, 1e-15));
        assert!(close(p.d, 13.0 / 9.0, 1e-15));
        assert!(close(p.prandtl, 1.5, 1e-15));
        assert_eq!(p.regime(), FlowRegime::Transonic);
    }

    #[test]
    fn scale_invariance_of_dimensionless_form() {
        let gas = PhysicalGas::new(0.5, 1.4, 0.7, 0.9).unwrap();
        let far = FarField::new(1.3, -0.8, 1.1).unwrap();
        let p1 = nondimensionalize(&gas, &far).unwrap();
        // Double rho_+ and rescale mu, kappa to keep mu_hat, kappa_hat, mach
        // fixed; the dimensionless parameters must not move.
        let gas2 = PhysicalGas::new(0.5, 1.4, 2.0 * 0.7, 2.0 * 0.9).unwrap();
        let far2 = FarField::new(2.0 * 1.3, -0.8, 1.1).unwrap();
        let p2 = nondimensionalize(&gas2, &far2).unwrap();
        assert!(close(p1.mu_hat, p2.mu_hat, 1e-15));
        assert!(close(p1.kappa_hat, p2.kappa_hat, 1e-15));
        assert!(close(p1.mach, p2.mach, 1e-15));
        assert!(close(p1.prandtl, p2.prandtl, 1e-15));
    }

    #[test]
    fn mach_examples() {
        let gas = PhysicalGas::new(0.5, 2.0, 1.0, 1.0).unwrap();
        let far1 = FarField::new(1.0, -1.0, 1.0).unwrap();
        assert!(close(mach_number(&gas, &far1).unwrap(), 1.0, 1e-15));
        let far2 = FarField::new(1.0, -2.0, 1.0).unwrap();
        assert!(close(mach_number(&gas, &far2).unwrap(), 2.0, 1e-15));
        // c_+ = sqrt(R gamma theta_+) = 1 here
        let gas3 = PhysicalGas::new(1.0, 5.0 / 3.0, 1.0, 1.0).unwrap();
        let far3 = FarField::new(1.0, -2.0, 0.6).unwrap();
        assert!(close(mach_number(&gas3, &far3).unwrap(), 2.0, 1e-12));
    }

    #[test]
    fn boundary_strength_examples() {
        assert!(close(boundary_strength(-1.0, 1.0).unwrap(), 0.0, 0.0));
        assert!(close(
            boundary_strength(-1.05, 1.02).unwrap(),
            0.0029f64.sqrt(),
            1e-15
        ));
        assert!(close(boundary_strength(-1.1, 1.0).unwrap(), 0.1, 1e-15));
        assert!(boundary_strength(0.1, 1.0).is_err());
        assert!(boundary_strength(-1.0, -0.5).is_err());
    }

    #[test]
    fn prandtl_two_routes_agree() {
        // Physical route mu c_p / kappa vs dimensionless route.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let gas = PhysicalGas::new(
                rng.gen_range(0.1..5.0),
                rng.gen_range(1.05..3.0),
                rng.gen_range(0.05..4.0),
                rng.gen_range(0.05..4.0),
            )
            .unwrap();
            let far = FarField::new(
                rng.gen_range(0.2..4.0),
                -rng.gen_range(0.2..4.0),
                rng.gen_range(0.2..4.0),
            )
            .unwrap();
            let p = nondimensionalize(&gas, &far).unwrap();
            let physical = gas.prandtl();
            let rel = ((p.prandtl - physical) / physical).abs();
            assert!(rel < 1e-12, "Prandtl mismatch: {rel}");
        }
    }

    #[test]
    fn cv_hat_identity() {
        for gamma in [1.1, 1.4, 5.0 / 3.0, 2.0, 2.7] {
            let p = DimensionlessParams::from_dimensionless(gamma, 1.0, 1.0, 1.0).unwrap();
            assert!((p.cv_hat * gamma * (gamma - 1.0) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn idempotent_on_dimensionless_input() {
        // rho_+ = theta_+ = 1, u_+ = -1, and R chosen so the Mach number is
        // already the dimensionless one.
        let gamma = 1.4;
        let mach = 0.75;
        let r = 1.0 / (gamma * mach * mach);
        let gas = PhysicalGas::new(r, gamma, 0.9, 1.2).unwrap();
        let far = FarField::new(1.0, -1.0, 1.0).unwrap();
        let p = nondimensionalize(&gas, &far).unwrap();
        assert!((p.mach - mach).abs() < 1e-14);
        assert!((p.mu_hat - 0.9).abs() < 1e-14);
        assert!((p.kappa_hat - 1.2).abs() < 1e-14);
        let p2 =
            DimensionlessParams::from_dimensionless(p.gamma, p.mu_hat, p.kappa_hat, p.mach)
                .unwrap();
        assert!((p2.prandtl - p.prandtl).abs() < 1e-14);
        assert!((p2.d - p.d).abs() < 1e-14);
    }
}
