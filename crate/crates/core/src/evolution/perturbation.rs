//! Initial perturbations around a stationary profile.

use serde::{Deserialize, Serialize};

use crate::evolution::{EvolutionState, Grid};
use crate::stationary::StationaryProfile;
use crate::{Error, Result};

/// Spatial shape of a perturbation. Shapes applied to `u` or `theta` are
/// multiplied by the ramp `1 - exp(-x)` where they do not already vanish at
/// the wall, keeping the boundary conditions compatible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationShape {
    /// `(1 + x)^{-exponent}`; lies in the alpha-weighted L2 space exactly
    /// for `alpha < 2 exponent - 1`.
    AlgebraicTail { exponent: f64 },
    GaussianBump { center: f64, width: f64 },
    /// `sin^2(pi x / cutoff)` supported on `[0, cutoff]`.
    Compact { cutoff: f64 },
}

impl PerturbationShape {
    fn eval(&self, x: f64) -> f64 {
        match *self {
            PerturbationShape::AlgebraicTail { exponent } => (1.0 + x).powf(-exponent),
            PerturbationShape::GaussianBump { center, width } => {
                let z = (x - center) / width;
                (-0.5 * z * z).exp()
            }
            PerturbationShape::Compact { cutoff } => {
                if x <= 0.0 || x >= cutoff {
                    0.0
                } else {
                    let s = (std::f64::consts::PI * x / cutoff).sin();
                    s * s
                }
            }
        }
    }

    fn vanishes_at_wall(&self) -> bool {
        matches!(self, PerturbationShape::Compact { .. })
    }
}

/// Which fields receive the perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldMask {
    pub rho: bool,
    pub u: bool,
    pub theta: bool,
}

impl Default for FieldMask {
    fn default() -> Self {
        Self {
            rho: true,
            u: true,
            theta: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub amplitude: f64,
    pub shape: PerturbationShape,
    #[serde(default)]
    pub fields: FieldMask,
}

impl PerturbationSpec {
    /// Perturbation value for a wall-constrained field (`u`, `theta`).
    pub fn eval_constrained(&self, x: f64) -> f64 {
        let ramp = if self.shape.vanishes_at_wall() {
            1.0
        } else {
            1.0 - (-x).exp()
        };
        self.amplitude * ramp * self.shape.eval(x)
    }

    /// Perturbation value for the unconstrained density field.
    pub fn eval_free(&self, x: f64) -> f64 {
        self.amplitude * self.shape.eval(x)
    }
}

/// A freshly built initial state, with a note on whether the profile had to
/// be resampled onto the evolution grid.
#[derive(Debug, Clone)]
pub struct InitialState {
    pub state: EvolutionState,
    pub resampled: bool,
}

fn resample(xs_from: &[f64], ys_from: &[f64], x: f64) -> f64 {
    // linear interpolation with constant extension
    if x <= xs_from[0] {
        return ys_from[0];
    }
    let last = xs_from.len() - 1;
    if x >= xs_from[last] {
        return ys_from[last];
    }
    let dx = xs_from[1] - xs_from[0];
    let i = (((x - xs_from[0]) / dx).floor() as usize).min(last - 1);
    let t = (x - xs_from[i]) / dx;
    ys_from[i] * (1.0 - t) + ys_from[i + 1] * t
}

/// Superpose a perturbation on a stationary profile to form the initial
/// state of an evolution run.
pub fn build_initial(
    profile: &StationaryProfile,
    pert: &PerturbationSpec,
    grid: &Grid,
) -> Result<InitialState> {
    grid.validate()?;
    let xs = grid.xs();
    let same_grid = profile.len() == grid.n
        && (profile.x.last().copied().unwrap_or(f64::NAN) - grid.x_max).abs() < 1e-12;
    let (rho0, u0, theta0): (Vec<f64>, Vec<f64>, Vec<f64>) = if same_grid {
        (profile.rho.clone(), profile.u.clone(), profile.theta.clone())
    } else {
        (
            xs.iter().map(|&x| resample(&profile.x, &profile.rho, x)).collect(),
            xs.iter().map(|&x| resample(&profile.x, &profile.u, x)).collect(),
            xs.iter().map(|&x| resample(&profile.x, &profile.theta, x)).collect(),
        )
    };

    let base = EvolutionState {
        t: 0.0,
        rho: rho0,
        u: u0,
        theta: theta0,
    };
    let state = perturb_state(&base, pert, grid)?;
    Ok(InitialState {
        state,
        resampled: !same_grid,
    })
}

/// Superpose a perturbation on an arbitrary reference state (used directly
/// when the reference is a relaxed discrete steady state).
pub fn perturb_state(
    base: &EvolutionState,
    pert: &PerturbationSpec,
    grid: &Grid,
) -> Result<EvolutionState> {
    if base.len() != grid.n {
        return Err(Error::GridMismatch(format!(
            "reference state has {} nodes, grid {}",
            base.len(),
            grid.n
        )));
    }
    let mut state = base.clone();
    state.t = 0.0;
    for (i, &x) in grid.xs().iter().enumerate() {
        if pert.fields.rho {
            state.rho[i] += pert.eval_free(x);
        }
        if pert.fields.u {
            state.u[i] += pert.eval_constrained(x);
        }
        if pert.fields.theta {
            state.theta[i] += pert.eval_constrained(x);
        }
    }
    if pert.fields.u && pert.eval_constrained(0.0).abs() > 1e-12 {
        return Err(Error::Domain(
            "velocity perturbation does not vanish at the wall".into(),
        ));
    }
    if pert.fields.theta && pert.eval_constrained(0.0).abs() > 1e-12 {
        return Err(Error::Domain(
            "temperature perturbation does not vanish at the wall".into(),
        ));
    }
    state.check_invariants().map_err(|e| {
        Error::Domain(format!(
            "perturbation amplitude {} violates field positivity: {e}",
            pert.amplitude
        ))
    })?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundaryData, DimensionlessParams};
    use crate::stationary::solve_stationary;

    fn supersonic_profile(grid: &Grid) -> StationaryProfile {
        let p = DimensionlessParams::from_dimensionless(5.0 / 3.0, 1.0, 1.0, 2.0).unwrap();
        let bd = BoundaryData::new(-1.05, 1.05).unwrap();
        solve_stationary(&bd, &p, grid).unwrap()
    }

    #[test]
    fn zero_amplitude_reproduces_profile() {
        let grid = Grid::new(40.0, 401).unwrap();
        let prof = supersonic_profile(&grid);
        let spec = PerturbationSpec {
            amplitude: 0.0,
            shape: PerturbationShape::GaussianBump {
                center: 5.0,
                width: 1.0,
            },
            fields: FieldMask::default(),
        };
        let init = build_initial(&prof, &spec, &grid).unwrap();
        assert!(!init.resampled);
        assert_eq!(init.state.rho, prof.rho);
        assert_eq!(init.state.u, prof.u);
        assert_eq!(init.state.theta, prof.theta);
    }

    #[test]
    fn gaussian_bump_sup_norm() {
        let grid = Grid::new(40.0, 2001).unwrap();
        let prof = supersonic_profile(&grid);
        let spec = PerturbationSpec {
            amplitude: 0.01,
            shape: PerturbationShape::GaussianBump {
                center: 5.0,
                width: 1.0,
            },
            fields: FieldMask::default(),
        };
        let init = build_initial(&prof, &spec, &grid).unwrap();
        let sup = init
            .state
            .sup_distance(&prof.rho, &prof.u, &prof.theta);
        assert!((sup - 0.01).abs() < 1e-4, "sup = {sup}");
        // wall compatibility
        assert_eq!(init.state.u[0], prof.u[0]);
        assert_eq!(init.state.theta[0], prof.theta[0]);
    }

    #[test]
    fn positivity_violation_rejected() {
        let grid = Grid::new(40.0, 401).unwrap();
        let prof = supersonic_profile(&grid);
        let spec = PerturbationSpec {
            amplitude: 5.0,
            shape: PerturbationShape::GaussianBump {
                center: 5.0,
                width: 1.0,
            },
            fields: FieldMask::default(),
        };
        assert!(build_initial(&prof, &spec, &grid).is_err());
    }

    #[test]
    fn resampling_is_flagged() {
        let grid_profile = Grid::new(40.0, 801).unwrap();
        let prof = supersonic_profile(&grid_profile);
        let grid_run = Grid::new(40.0, 401).unwrap();
        let spec = PerturbationSpec {
            amplitude: 0.0,
            shape: PerturbationShape::Compact { cutoff: 10.0 },
            fields: FieldMask::default(),
        };
        let init = build_initial(&prof, &spec, &grid_run).unwrap();
        assert!(init.resampled);
    }
}
