//! Existence classification of boundary data and computation of stationary
//! profiles in all three regimes.
//!
//! The integration strategy follows the phase-space geometry: supersonic
//! profiles fall into a stable node and are integrated forward from the
//! boundary data; subsonic profiles live on the one-dimensional stable
//! manifold of a saddle and are reconstructed by backward integration from
//! a small offset along the stable eigenvector; transonic profiles are
//! integrated forward until the fast stable component has died out, then
//! continued along the scalar center flow to avoid resolving a dead mode
//! over an algebraically long tail.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{RateFit, RateModel};
use crate::evolution::Grid;
use crate::model::{BoundaryData, DimensionlessParams, FlowRegime};
use crate::numerics::{linear_fit, Rk45, Rk45Options};
use crate::stationary::{
    center_manifold_numeric, eigen_analysis, manifold::stable_manifold_from_equilibrium, ode_rhs,
    rhs_vec,
};
use crate::{Error, Result};

/// Tunables for the existence classification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifySettings {
    /// Smallness radius of the existence neighborhood in the
    /// `(u + 1, theta - 1)` plane.
    pub smallness_eps0: f64,
    /// Distance (in diagonal coordinates) below which boundary data counts
    /// as sitting on the stable manifold. Distances in `(tol, 2 tol]` are
    /// classified by side but flagged uncertain.
    pub manifold_tol: f64,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            smallness_eps0: 0.2,
            manifold_tol: 1e-6,
        }
    }
}

/// Verdict of the existence classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    /// Existence holds on an open set (supersonic smallness, or the open
    /// side of the transonic stable manifold).
    InteriorExistence,
    /// The data sits on the stable manifold (within tolerance).
    OnStableManifold,
    NoStationarySolution,
    /// The data is too far from the far field for the small-data theory.
    OutsideSmallness,
}

/// Classification result together with the raw side information.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub class: BoundaryClass,
    /// Set when the distance to the manifold falls in the ambiguous
    /// `(tol, 2 tol]` band.
    pub uncertain: bool,
    /// Signed transverse coordinate `Uhat - h_s(Thetahat)`; positive is the
    /// existence side at Mach 1. `None` in the supersonic regime.
    pub manifold_side: Option<f64>,
    pub delta: f64,
    pub regime: FlowRegime,
}

/// Classify boundary data against the regime's existence condition.
pub fn classify_boundary(
    bd: &BoundaryData,
    params: &DimensionlessParams,
    settings: &ClassifySettings,
) -> Result<Classification> {
    let regime = params.regime();
    let delta = bd.delta;
    if delta >= settings.smallness_eps0 {
        return Ok(Classification {
            class: BoundaryClass::OutsideSmallness,
            uncertain: false,
            manifold_side: None,
            delta,
            regime,
        });
    }
    if delta < 1e-14 {
        // The far field itself: trivially a (constant) stationary solution.
        return Ok(Classification {
            class: BoundaryClass::OnStableManifold,
            uncertain: false,
            manifold_side: Some(0.0),
            delta,
            regime,
        });
    }
    match regime {
        FlowRegime::Supersonic => Ok(Classification {
            class: BoundaryClass::InteriorExistence,
            uncertain: false,
            manifold_side: None,
            delta,
            regime,
        }),
        FlowRegime::Transonic | FlowRegime::Subsonic => {
            let eq = eigen_analysis(params)?;
            let (u_hat, t_hat) = eq.to_diagonal(bd.u_b + 1.0, bd.theta_b - 1.0);
            let radius = (1.5 * t_hat.abs()).clamp(0.01, 0.25);
            let curve = stable_manifold_from_equilibrium(params, &eq, radius)?;
            let side = u_hat - curve.eval(t_hat);
            let tol = settings.manifold_tol;
            let (class, uncertain) = if side.abs() <= tol {
                (BoundaryClass::OnStableManifold, false)
            } else {
                let uncertain = side.abs() <= 2.0 * tol;
                let class = match regime {
                    FlowRegime::Transonic => {
                        if side > 0.0 {
                            BoundaryClass::InteriorExistence
                        } else {
                            BoundaryClass::NoStationarySolution
                        }
                    }
                    _ => BoundaryClass::NoStationarySolution,
                };
                (class, uncertain)
            };
            Ok(Classification {
                class,
                uncertain,
                manifold_side: Some(side),
                delta,
                regime,
            })
        }
    }
}

/// A sampled stationary profile with derivative fields and quality metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryProfile {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub u_x: Vec<f64>,
    pub theta_x: Vec<f64>,
    pub delta: f64,
    pub regime: FlowRegime,
    /// Max interior defect between a high-order finite difference of the
    /// sampled fields and the stored ODE derivative fields.
    pub residual: f64,
    /// Fitted decay law of the tail; `None` for constant profiles.
    pub decay: Option<RateFit>,
}

impl StationaryProfile {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dx(&self) -> f64 {
        if self.x.len() < 2 {
            0.0
        } else {
            self.x[1] - self.x[0]
        }
    }

    /// `|(u + 1, theta - 1)|` at node `i`.
    pub fn amplitude(&self, i: usize) -> f64 {
        let ub = self.u[i] + 1.0;
        let tb = self.theta[i] - 1.0;
        (ub * ub + tb * tb).sqrt()
    }

    /// Worst pointwise violation of the mass-flux identity `rho u = -1`.
    pub fn mass_flux_defect(&self) -> f64 {
        self.rho
            .iter()
            .zip(&self.u)
            .map(|(r, u)| (r * u + 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Solve the stationary boundary-value problem with default classification
/// settings.
pub fn solve_stationary(
    bd: &BoundaryData,
    params: &DimensionlessParams,
    grid: &Grid,
) -> Result<StationaryProfile> {
    solve_stationary_with(bd, params, grid, &ClassifySettings::default())
}

/// Solve the stationary boundary-value problem.
pub fn solve_stationary_with(
    bd: &BoundaryData,
    params: &DimensionlessParams,
    grid: &Grid,
    settings: &ClassifySettings,
) -> Result<StationaryProfile> {
    grid.validate()?;
    let class = classify_boundary(bd, params, settings)?;
    match class.class {
        BoundaryClass::OutsideSmallness => {
            return Err(Error::NoStationarySolution(format!(
                "boundary strength {:.3e} is outside the smallness radius {:.3e}",
                class.delta, settings.smallness_eps0
            )));
        }
        BoundaryClass::NoStationarySolution => {
            return Err(Error::NoStationarySolution(format!(
                "boundary data lies on the non-existence side of the stable manifold \
                 (transverse coordinate {:+.3e})",
                class.manifold_side.unwrap_or(f64::NAN)
            )));
        }
        _ => {}
    }
    if bd.delta < 1e-14 {
        return Ok(constant_profile(bd, params, grid));
    }
    let regime = params.regime();
    let mut profile = match regime {
        FlowRegime::Supersonic => solve_supersonic(bd, params, grid)?,
        FlowRegime::Transonic => solve_transonic(bd, params, grid)?,
        FlowRegime::Subsonic => solve_subsonic(bd, params, grid, settings, &class)?,
    };
    profile.residual = sampling_residual(&profile);
    for (r, th) in profile.rho.iter().zip(&profile.theta) {
        if !(*r > 0.0) || !(*th > 0.0) {
            return Err(Error::Numerical(
                "stationary profile lost positivity".into(),
            ));
        }
    }
    Ok(profile)
}

fn constant_profile(bd: &BoundaryData, params: &DimensionlessParams, grid: &Grid) -> StationaryProfile {
    let n = grid.n;
    StationaryProfile {
        x: grid.xs(),
        rho: vec![1.0; n],
        u: vec![-1.0; n],
        theta: vec![1.0; n],
        u_x: vec![0.0; n],
        theta_x: vec![0.0; n],
        delta: bd.delta,
        regime: params.regime(),
        residual: 0.0,
        decay: None,
    }
}

/// Assemble profile arrays from `(ubar, tbar)` samples, with derivatives
/// taken from the ODE right side itself.
fn assemble(
    samples: &[[f64; 2]],
    grid: &Grid,
    bd: &BoundaryData,
    params: &DimensionlessParams,
    decay: Option<RateFit>,
) -> Result<StationaryProfile> {
    let n = samples.len();
    let mut rho = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut u_x = Vec::with_capacity(n);
    let mut theta_x = Vec::with_capacity(n);
    for w in samples {
        let ut = w[0] - 1.0;
        u.push(ut);
        theta.push(w[1] + 1.0);
        rho.push(-1.0 / ut);
        let (du, dt) = ode_rhs(w[0], w[1], params)?;
        u_x.push(du);
        theta_x.push(dt);
    }
    Ok(StationaryProfile {
        x: grid.xs(),
        rho,
        u,
        theta,
        u_x,
        theta_x,
        delta: bd.delta,
        regime: params.regime(),
        residual: 0.0,
        decay,
    })
}

/// Interior defect of the sampled profile against its stored derivatives,
/// using fourth-order central differences (the dominant error is then the
/// sampling density, not the integrator tolerance).
fn sampling_residual(p: &StationaryProfile) -> f64 {
    let n = p.x.len();
    if n < 5 {
        return 0.0;
    }
    let dx = p.dx();
    let mut worst: f64 = 0.0;
    for i in 2..n - 2 {
        let du = (-p.u[i + 2] + 8.0 * p.u[i + 1] - 8.0 * p.u[i - 1] + p.u[i - 2]) / (12.0 * dx);
        let dt = (-p.theta[i + 2] + 8.0 * p.theta[i + 1] - 8.0 * p.theta[i - 1]
            + p.theta[i - 2])
            / (12.0 * dx);
        worst = worst.max((du - p.u_x[i]).abs()).max((dt - p.theta_x[i]).abs());
    }
    worst
}

fn rk_options() -> Rk45Options {
    Rk45Options {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        h_initial: 1e-3,
        ..Rk45Options::default()
    }
}

fn solve_supersonic(
    bd: &BoundaryData,
    params: &DimensionlessParams,
    grid: &Grid,
) -> Result<StationaryProfile> {
    let w0 = [bd.u_b + 1.0, bd.theta_b - 1.0];
    let cap = (4.0 * bd.delta).max(0.5);
    let mut solver = Rk45::new(
        |_x, w: &[f64; 2]| {
            if w[0].abs().max(w[1].abs()) > cap {
                return Err(Error::NoStationarySolution(
                    "supersonic stationary trajectory diverges from the equilibrium".into(),
                ));
            }
            rhs_vec(params, w)
        },
        rk_options(),
    );
    let xs = grid.xs();
    let samples = solver.sample_at(0.0, w0, &xs)?;
    let amp: Vec<f64> = samples
        .iter()
        .map(|w| (w[0] * w[0] + w[1] * w[1]).sqrt())
        .collect();
    let decay = exp_tail_fit(&xs, &amp);
    assemble(&samples, grid, bd, params, decay)
}

fn solve_transonic(
    bd: &BoundaryData,
    params: &DimensionlessParams,
    grid: &Grid,
) -> Result<StationaryProfile> {
    let eq = eigen_analysis(params)?;
    let (u_hat0, t_hat0) = eq.to_diagonal(bd.u_b + 1.0, bd.theta_b - 1.0);
    let radius = (2.0 * (u_hat0.abs() + t_hat0.abs())).clamp(0.02, 0.2);
    let hc = center_manifold_numeric(params, radius, 6)?;
    let w0 = [bd.u_b + 1.0, bd.theta_b - 1.0];

    // Phase one: full system, forward, until the fast stable component has
    // decayed below 1e-10 (measured as the distance to the center manifold
    // in diagonal coordinates).
    let stable_component = |w: &[f64; 2]| -> f64 {
        let v = eq.p_inv * Vector2::new(w[0], w[1]);
        (v[1] - hc.eval(v[0])).abs()
    };
    let mut tracer = Rk45::new(|_x, w: &[f64; 2]| rhs_vec(params, w), rk_options());
    let path = tracer.trace_until(0.0, w0, grid.x_max, |x, w| {
        x > 0.0 && stable_component(w) < 1e-10
    })?;
    let (x_switch, w_switch) = *path.last().unwrap();

    let xs = grid.xs();
    let n_full = xs.iter().take_while(|&&x| x <= x_switch).count();
    let mut samples = Vec::with_capacity(xs.len());
    if n_full > 0 {
        let mut solver = Rk45::new(|_x, w: &[f64; 2]| rhs_vec(params, w), rk_options());
        samples.extend(solver.sample_at(0.0, w0, &xs[..n_full])?);
    }

    // Phase two: scalar center flow z' = f(z, h_c(z)) from the switch
    // point; the dropped component is below the switch threshold.
    if n_full < xs.len() {
        let v = eq.p_inv * Vector2::new(w_switch[0], w_switch[1]);
        let z_switch = v[0];
        let mut scalar = Rk45::new(
            |_x, z: &[f64; 1]| {
                let (f, _g) = eq.diagonal_nonlinearity(params, z[0], hc.eval(z[0]))?;
                Ok([f])
            },
            rk_options(),
        );
        let zs = scalar.sample_at(x_switch, [z_switch], &xs[n_full..])?;
        for z in zs {
            let (ubar, tbar) = eq.from_diagonal(z[0], hc.eval(z[0]));
            samples.push([ubar, tbar]);
        }
    }

    let amp: Vec<f64> = samples
        .iter()
        .map(|w| (w[0] * w[0] + w[1] * w[1]).sqrt())
        .collect();
    // On-manifold data (z ~ 0) has no algebraic tail to fit; fall back to
    // the exponential model there.
    let decay = if u_hat0.abs() < 1e-9 {
        exp_tail_fit(&xs, &amp)
    } else {
        algebraic_tail_fit(&xs, &amp, bd.delta)
    };
    assemble(&samples, grid, bd, params, decay)
}

fn solve_subsonic(
    bd: &BoundaryData,
    params: &DimensionlessParams,
    grid: &Grid,
    settings: &ClassifySettings,
    class: &Classification,
) -> Result<StationaryProfile> {
    let eq = eigen_analysis(params)?;
    let (_u_hat0, t_hat0) = eq.to_diagonal(bd.u_b + 1.0, bd.theta_b - 1.0);
    let eps = 1e-9;
    let r2_unit = eq.r2 / eq.r2.norm();
    let xs = grid.xs();

    if t_hat0.abs() <= 10.0 * eps {
        // Essentially at the equilibrium; the linearized manifold is exact
        // to working precision.
        let samples: Vec<[f64; 2]> = xs
            .iter()
            .map(|&x| {
                let th = t_hat0 * (eq.lambda2 * x).exp();
                [th * r2_unit[0] / 1.0, th * r2_unit[1] / 1.0]
            })
            .collect();
        let amp: Vec<f64> = samples
            .iter()
            .map(|w| (w[0] * w[0] + w[1] * w[1]).sqrt())
            .collect();
        let decay = exp_tail_fit(&xs, &amp);
        return assemble(&samples, grid, bd, params, decay);
    }

    let branch = t_hat0.signum();
    let w_eps = [branch * eps * r2_unit[0], branch * eps * r2_unit[1]];
    let backward = |_s: f64, w: &[f64; 2]| -> Result<[f64; 2]> {
        let r = rhs_vec(params, w)?;
        Ok([-r[0], -r[1]])
    };

    // Locate the backward time at which the trajectory's stable coordinate
    // reaches the boundary value.
    let target = t_hat0.abs();
    let coord = |w: &[f64; 2]| -> f64 {
        let v = eq.p_inv * Vector2::new(w[0], w[1]);
        v[1].abs()
    };
    let s_cap = 4.0 * (target / eps).ln() / eq.lambda2.abs() + 10.0;
    let mut tracer = Rk45::new(backward, rk_options());
    let path = tracer.trace_until(0.0, w_eps, s_cap, |_s, w| coord(w) >= target)?;
    let (s_hi, w_hi) = *path.last().unwrap();
    if coord(&w_hi) < target {
        return Err(Error::NonConvergence(
            "backward shoot along the stable manifold never reached the boundary data".into(),
        ));
    }
    let (mut s_lo, mut w_lo) = if path.len() >= 2 {
        path[path.len() - 2]
    } else {
        (0.0, w_eps)
    };
    let mut s_hi = s_hi;
    // Bisect on the arrival time; this plays the role of the one-parameter
    // shoot on the offset magnitude (shifting the start along the manifold
    // and shifting the arrival time are the same move).
    for _ in 0..80 {
        let mid = 0.5 * (s_lo + s_hi);
        let mut stepper = Rk45::new(backward, rk_options());
        let w_mid = stepper.sample_at(s_lo, w_lo, &[mid])?[0];
        if coord(&w_mid) >= target {
            s_hi = mid;
        } else {
            s_lo = mid;
            w_lo = w_mid;
        }
        if s_hi - s_lo < 1e-13 * s_hi.max(1.0) {
            break;
        }
    }
    let s_star = 0.5 * (s_lo + s_hi);
    let mut stepper = Rk45::new(backward, rk_options());
    let w_boundary = stepper.sample_at(0.0, w_eps, &[s_star])?[0];
    let miss = ((w_boundary[0] - (bd.u_b + 1.0)).powi(2)
        + (w_boundary[1] - (bd.theta_b - 1.0)).powi(2))
    .sqrt();
    if miss > 5.0 * settings.manifold_tol {
        return Err(Error::NonConvergence(format!(
            "stable-manifold shoot missed the boundary data by {:.3e} \
             (classification side {:+.3e})",
            miss,
            class.manifold_side.unwrap_or(f64::NAN)
        )));
    }

    // Sample the backward trajectory at s = s_star - x for grid nodes with
    // x <= s_star; beyond that the profile continues along the linearized
    // stable direction from the eps offset.
    let n_traj = xs.iter().take_while(|&&x| x < s_star).count();
    let mut samples = vec![[0.0; 2]; xs.len()];
    if n_traj > 0 {
        let s_list: Vec<f64> = (0..n_traj).rev().map(|i| s_star - xs[i]).collect();
        let mut sampler = Rk45::new(backward, rk_options());
        let vals = sampler.sample_at(0.0, w_eps, &s_list)?;
        for (k, w) in vals.into_iter().enumerate() {
            samples[n_traj - 1 - k] = w;
        }
    }
    for (i, &x) in xs.iter().enumerate().skip(n_traj) {
        let decay = (eq.lambda2 * (x - s_star)).exp();
        samples[i] = [
            branch * eps * decay * r2_unit[0],
            branch * eps * decay * r2_unit[1],
        ];
    }

    let amp: Vec<f64> = samples
        .iter()
        .map(|w| (w[0] * w[0] + w[1] * w[1]).sqrt())
        .collect();
    let decay = exp_tail_fit(&xs, &amp);
    assemble(&samples, grid, bd, params, decay)
}

/// Exponential tail fit on the last 40% of the domain restricted to the
/// amplitude band `[1e-9, 1e-3]`; if that intersection is too thin the
/// amplitude band alone is used.
fn exp_tail_fit(x: &[f64], amp: &[f64]) -> Option<RateFit> {
    let x_cut = x[0] + 0.6 * (x[x.len() - 1] - x[0]);
    let in_band = |a: f64| (1e-9..=1e-3).contains(&a);
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (&xi, &ai) in x.iter().zip(amp) {
        if xi >= x_cut && in_band(ai) {
            xs.push(xi);
            ys.push(ai.ln());
        }
    }
    if xs.len() < 10 {
        xs.clear();
        ys.clear();
        for (&xi, &ai) in x.iter().zip(amp) {
            if in_band(ai) {
                xs.push(xi);
                ys.push(ai.ln());
            }
        }
    }
    if xs.len() < 10 {
        return None;
    }
    let fit = linear_fit(&xs, &ys).ok()?;
    Some(RateFit {
        model: RateModel::Exponential,
        exponent_or_rate: -fit.slope,
        window: (xs[0], xs[xs.len() - 1]),
        r_squared: fit.r_squared,
        n_samples: xs.len(),
    })
}

/// Algebraic tail fit of `log amp` against `log(1 + delta x)` over
/// `delta x in [2, 20]`.
fn algebraic_tail_fit(x: &[f64], amp: &[f64], delta: f64) -> Option<RateFit> {
    if delta <= 0.0 {
        return None;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut window = (f64::INFINITY, f64::NEG_INFINITY);
    for (&xi, &ai) in x.iter().zip(amp) {
        let dxs = delta * xi;
        if (2.0..=20.0).contains(&dxs) && ai > 0.0 {
            xs.push((1.0 + dxs).ln());
            ys.push(ai.ln());
            window.0 = window.0.min(xi);
            window.1 = window.1.max(xi);
        }
    }
    if xs.len() < 10 {
        return None;
    }
    let fit = linear_fit(&xs, &ys).ok()?;
    Some(RateFit {
        model: RateModel::Algebraic,
        exponent_or_rate: fit.slope,
        window,
        r_squared: fit.r_squared,
        n_samples: xs.len(),
    })
}

/// Solution of the scalar center-flow equation `z_x = f(z, h_c(z))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenterFlow {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub z0: f64,
}

impl CenterFlow {
    /// Linear interpolation of `z` at `x` (the samples are uniform).
    pub fn z_at(&self, x: f64) -> Option<f64> {
        if self.x.is_empty() || x < self.x[0] || x > *self.x.last().unwrap() {
            return None;
        }
        let dx = if self.x.len() > 1 {
            self.x[1] - self.x[0]
        } else {
            return Some(self.z[0]);
        };
        let i = (((x - self.x[0]) / dx).floor() as usize).min(self.x.len() - 2);
        let t = (x - self.x[i]) / dx;
        Some(self.z[i] * (1.0 - t) + self.z[i + 1] * t)
    }
}

/// Integrate the center-flow equation from `z(0) = z0` over `[0, x_max]`
/// with `n` uniform samples.
pub fn solve_center_flow(
    z0: f64,
    params: &DimensionlessParams,
    x_max: f64,
    n: usize,
) -> Result<CenterFlow> {
    if params.regime() != FlowRegime::Transonic {
        return Err(Error::Regime(
            "the center flow is only defined in the transonic regime".into(),
        ));
    }
    if z0 < 0.0 {
        return Err(Error::NoStationarySolution(
            "center-flow boundary data must be positive for a decaying solution".into(),
        ));
    }
    if n < 2 {
        return Err(Error::Domain("center flow needs at least 2 samples".into()));
    }
    let xs: Vec<f64> = (0..n)
        .map(|i| x_max * i as f64 / (n - 1) as f64)
        .collect();
    if z0 == 0.0 {
        return Ok(CenterFlow {
            x: xs,
            z: vec![0.0; n],
            z0,
        });
    }
    if z0 > 0.18 {
        return Err(Error::Domain(format!(
            "center-flow data {z0} exceeds the manifold validity radius"
        )));
    }
    let eq = eigen_analysis(params)?;
    let hc = center_manifold_numeric(params, (1.3 * z0).clamp(0.01, 0.2), 6)?;
    let mut solver = Rk45::new(
        |_x, z: &[f64; 1]| {
            let (f, _g) = eq.diagonal_nonlinearity(params, z[0], hc.eval(z[0]))?;
            Ok([f])
        },
        rk_options(),
    );
    let zs = solver.sample_at(0.0, [z0], &xs)?;
    Ok(CenterFlow {
        x: xs,
        z: zs.into_iter().map(|z| z[0]).collect(),
        z0,
    })
}

/// Pointwise verification of the degenerate-profile structure over the
/// mid-range window `delta x in [2, 20]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureReport {
    pub window_x: (f64, f64),
    pub n_window: usize,
    /// `max | u_x 2d / ((gamma + 1) z^2) - 1 |` over the window.
    pub max_ux_ratio_error: Option<f64>,
    /// `max | theta_x / ((gamma - 1) u_x) - 1 |` over the window.
    pub max_thetax_ratio_error: Option<f64>,
    /// `max | (theta - 1) / ((1 - gamma) z) - 1 |` over the window.
    pub max_linear_ratio_error: Option<f64>,
    pub sufficient_signal: bool,
}

/// Compare the derivative structure of a degenerate profile against the
/// leading-order center-flow prediction.
pub fn degenerate_structure(
    profile: &StationaryProfile,
    flow: &CenterFlow,
    params: &DimensionlessParams,
) -> Result<StructureReport> {
    if profile.regime != FlowRegime::Transonic {
        return Err(Error::Regime(
            "the degenerate structure report applies to transonic profiles".into(),
        ));
    }
    let delta = profile.delta;
    if delta < 1e-10 {
        return Ok(StructureReport {
            window_x: (0.0, 0.0),
            n_window: 0,
            max_ux_ratio_error: None,
            max_thetax_ratio_error: None,
            max_linear_ratio_error: None,
            sufficient_signal: false,
        });
    }
    let (x_lo, x_hi) = (2.0 / delta, 20.0 / delta);
    let g = params.gamma;
    let two_d = 2.0 * params.d;
    let mut n_window = 0usize;
    let mut e_ux: f64 = 0.0;
    let mut e_tx: f64 = 0.0;
    let mut e_lin: f64 = 0.0;
    let mut usable = false;
    for (i, &x) in profile.x.iter().enumerate() {
        if x < x_lo || x > x_hi {
            continue;
        }
        n_window += 1;
        let Some(z) = flow.z_at(x) else { continue };
        if z.abs() < 1e-9 || profile.u_x[i].abs() < 1e-14 {
            continue;
        }
        usable = true;
        e_ux = e_ux.max((profile.u_x[i] * two_d / ((g + 1.0) * z * z) - 1.0).abs());
        e_tx = e_tx.max((profile.theta_x[i] / ((g - 1.0) * profile.u_x[i]) - 1.0).abs());
        e_lin = e_lin.max(((profile.theta[i] - 1.0) / ((1.0 - g) * z) - 1.0).abs());
    }
    if n_window == 0 {
        return Err(Error::InsufficientData(format!(
            "degenerate-structure window [{x_lo:.1}, {x_hi:.1}] does not meet the profile \
             domain [0, {:.1}]",
            profile.x.last().copied().unwrap_or(0.0)
        )));
    }
    if !usable {
        return Ok(StructureReport {
            window_x: (x_lo, x_hi),
            n_window,
            max_ux_ratio_error: None,
            max_thetax_ratio_error: None,
            max_linear_ratio_error: None,
            sufficient_signal: false,
        });
    }
    Ok(StructureReport {
        window_x: (x_lo, x_hi),
        n_window,
        max_ux_ratio_error: Some(e_ux),
        max_thetax_ratio_error: Some(e_tx),
        max_linear_ratio_error: Some(e_lin),
        sufficient_signal: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stationary::{boundary_near_stable_manifold, boundary_on_center_manifold};

    fn params(mach: f64) -> DimensionlessParams {
        DimensionlessParams::from_dimensionless(5.0 / 3.0, 1.0, 1.0, mach).unwrap()
    }

    #[test]
    fn classify_far_field_is_on_manifold() {
        for mach in [0.5, 1.0, 2.0] {
            let c = classify_boundary(
                &BoundaryData::far_field(),
                &params(mach),
                &ClassifySettings::default(),
            )
            .unwrap();
            assert_eq!(c.class, BoundaryClass::OnStableManifold);
        }
    }

    #[test]
    fn classify_supersonic_smallness() {
        let p = params(2.0);
        let bd = BoundaryData::new(-1.05, 1.0).unwrap();
        let c = classify_boundary(&bd, &p, &ClassifySettings::default()).unwrap();
        assert_eq!(c.class, BoundaryClass::InteriorExistence);
        let big = BoundaryData::new(-1.5, 1.3).unwrap();
        let c = classify_boundary(&big, &p, &ClassifySettings::default()).unwrap();
        assert_eq!(c.class, BoundaryClass::OutsideSmallness);
    }

    #[test]
    fn classify_transonic_bracketing_pair() {
        let p = params(1.0);
        let inside = boundary_near_stable_manifold(&p, 0.02, 1e-3).unwrap();
        let outside = boundary_near_stable_manifold(&p, 0.02, -1e-3).unwrap();
        let s = ClassifySettings::default();
        assert_eq!(
            classify_boundary(&inside, &p, &s).unwrap().class,
            BoundaryClass::InteriorExistence
        );
        assert_eq!(
            classify_boundary(&outside, &p, &s).unwrap().class,
            BoundaryClass::NoStationarySolution
        );
    }

    #[test]
    fn classify_uncertain_band() {
        let p = params(1.0);
        let s = ClassifySettings::default();
        let near = boundary_near_stable_manifold(&p, 0.02, 1.5 * s.manifold_tol).unwrap();
        let c = classify_boundary(&near, &p, &s).unwrap();
        assert!(c.uncertain);
    }

    #[test]
    fn delta_zero_constant_profile() {
        let p = params(2.0);
        let grid = Grid::new(10.0, 101).unwrap();
        let prof = solve_stationary(&BoundaryData::far_field(), &p, &grid).unwrap();
        assert_eq!(prof.residual, 0.0);
        assert!(prof.u.iter().all(|&v| v == -1.0));
        assert!(prof.decay.is_none());
    }

    #[test]
    fn supersonic_profile_residual_and_rate() {
        let p = params(2.0);
        // delta = 0.05 split between both components
        let bd = BoundaryData::new(-1.0 - 0.05 / 2f64.sqrt(), 1.0 + 0.05 / 2f64.sqrt()).unwrap();
        let grid = Grid::new(100.0, 2501).unwrap();
        let prof = solve_stationary(&bd, &p, &grid).unwrap();
        assert!(prof.residual < 1e-8, "residual {:.3e}", prof.residual);
        assert!(prof.mass_flux_defect() < 1e-10);
        let fit = prof.decay.unwrap();
        assert!(matches!(fit.model, RateModel::Exponential));
        let expected = 0.19086438440344877;
        assert!(
            (fit.exponent_or_rate - expected).abs() < 0.05 * expected,
            "tail rate {} vs |lambda1| {}",
            fit.exponent_or_rate,
            expected
        );
    }

    #[test]
    fn supersonic_tail_eventually_monotone() {
        let p = params(2.0);
        let bd = BoundaryData::new(-1.05, 1.0).unwrap();
        let grid = Grid::new(80.0, 1601).unwrap();
        let prof = solve_stationary(&bd, &p, &grid).unwrap();
        let amps: Vec<f64> = (0..prof.len()).map(|i| prof.amplitude(i)).collect();
        let start = prof.len() / 2;
        for i in start..prof.len() - 1 {
            assert!(
                amps[i + 1] <= amps[i] * (1.0 + 1e-9),
                "tail not monotone at node {i}"
            );
        }
    }

    #[test]
    fn transonic_profile_envelope() {
        let p = params(1.0);
        let bd = boundary_on_center_manifold(&p, 0.04).unwrap();
        let delta = bd.delta;
        let grid = Grid::new(22.0 / delta, 8001).unwrap();
        let prof = solve_stationary(&bd, &p, &grid).unwrap();
        assert!(prof.residual < 1e-6, "residual {:.3e}", prof.residual);
        // |u + 1| (1 + delta x) / delta bounded on delta x in [2, 20]
        for (i, &x) in prof.x.iter().enumerate() {
            let dxs = delta * x;
            if (2.0..=20.0).contains(&dxs) {
                let env = (prof.u[i] + 1.0).abs() * (1.0 + dxs) / delta;
                assert!(env > 0.3 && env < 3.0, "envelope {env} at delta x = {dxs}");
            }
        }
        let fit = prof.decay.unwrap();
        assert!(matches!(fit.model, RateModel::Algebraic));
    }

    #[test]
    fn transonic_center_coordinate_monotone() {
        let p = params(1.0);
        let eq = eigen_analysis(&p).unwrap();
        let bd = boundary_on_center_manifold(&p, 0.04).unwrap();
        let grid = Grid::new(400.0, 4001).unwrap();
        let prof = solve_stationary(&bd, &p, &grid).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..prof.len() {
            let (z, _) = eq.to_diagonal(prof.u[i] + 1.0, prof.theta[i] - 1.0);
            assert!(z > 0.0, "z must stay positive (node {i})");
            assert!(z < prev + 1e-12, "z must decrease (node {i})");
            prev = z;
        }
    }

    #[test]
    fn transonic_wrong_side_errors() {
        let p = params(1.0);
        let bd = boundary_near_stable_manifold(&p, 0.02, -1e-3).unwrap();
        let grid = Grid::new(100.0, 1001).unwrap();
        match solve_stationary(&bd, &p, &grid) {
            Err(Error::NoStationarySolution(_)) => {}
            other => panic!("expected nonexistence, got {other:?}"),
        }
    }

    #[test]
    fn subsonic_profile_via_backward_shoot() {
        let p = params(0.5);
        let bd = boundary_near_stable_manifold(&p, 0.03, 0.0).unwrap();
        let grid = Grid::new(8.0, 1601).unwrap();
        let prof = solve_stationary(&bd, &p, &grid).unwrap();
        assert!(prof.residual < 1e-8, "residual {:.3e}", prof.residual);
        assert!((prof.u[0] - bd.u_b).abs() < 1e-5);
        assert!((prof.theta[0] - bd.theta_b).abs() < 1e-5);
        let eq = eigen_analysis(&p).unwrap();
        let fit = prof.decay.unwrap();
        let expected = eq.lambda2.abs();
        assert!(
            (fit.exponent_or_rate - expected).abs() < 0.05 * expected,
            "subsonic tail rate {} vs |lambda2| {}",
            fit.exponent_or_rate,
            expected
        );
    }

    #[test]
    fn subsonic_off_manifold_errors() {
        let p = params(0.5);
        let bd = BoundaryData::new(-1.02, 1.01).unwrap();
        let c = classify_boundary(&bd, &p, &ClassifySettings::default()).unwrap();
        // generic data will not land on the measure-zero curve
        assert_eq!(c.class, BoundaryClass::NoStationarySolution);
    }

    #[test]
    fn center_flow_riccati_half_value() {
        let p = params(1.0);
        let z0 = 0.05;
        let flow = solve_center_flow(z0, &p, 60.0, 6001).unwrap();
        // Riccati solution z0 / (1 + (gamma+1)/(2d) z0 x) halves at
        // x = 2d/((gamma+1) z0) = 21.666...
        let x_half = 21.666666666666664;
        let z_at = flow.z_at(x_half).unwrap();
        assert!(
            (z_at - 0.5 * z0).abs() < 0.05 * 0.5 * z0,
            "half value {z_at} at x = {x_half}"
        );
        // strictly decreasing, positive
        for w in flow.z.windows(2) {
            assert!(w[1] > 0.0 && w[1] < w[0]);
        }
    }

    #[test]
    fn center_flow_trivial_and_invalid_data() {
        let p = params(1.0);
        let flow = solve_center_flow(0.0, &p, 10.0, 11).unwrap();
        assert!(flow.z.iter().all(|&z| z == 0.0));
        assert!(solve_center_flow(-0.01, &p, 10.0, 11).is_err());
    }

    #[test]
    fn center_flow_algebraic_envelope() {
        let p = params(1.0);
        let z0 = 0.05;
        let delta = z0;
        let flow = solve_center_flow(z0, &p, 40.0 / delta, 20001).unwrap();
        for (&x, &z) in flow.x.iter().zip(&flow.z) {
            let env = z * (1.0 + delta * x) / delta;
            assert!(env > 0.3 && env < 3.0, "center-flow envelope {env} at x={x}");
        }
    }

    #[test]
    fn degenerate_structure_ratios() {
        let p = params(1.0);
        let eq = eigen_analysis(&p).unwrap();
        let bd = boundary_on_center_manifold(&p, 0.04).unwrap();
        let delta = bd.delta;
        let grid = Grid::new(22.0 / delta, 8001).unwrap();
        let prof = solve_stationary(&bd, &p, &grid).unwrap();
        let (z0, _) = eq.to_diagonal(bd.u_b + 1.0, bd.theta_b - 1.0);
        let flow = solve_center_flow(z0, &p, 22.0 / delta, 8001).unwrap();
        let rep = degenerate_structure(&prof, &flow, &p).unwrap();
        assert!(rep.sufficient_signal);
        assert!(rep.max_ux_ratio_error.unwrap() < 0.10);
        assert!(rep.max_thetax_ratio_error.unwrap() < 0.10);
        assert!(rep.max_linear_ratio_error.unwrap() < 0.15);
    }

    #[test]
    fn degenerate_structure_residual_shrinks_with_delta() {
        let p = params(1.0);
        let eq = eigen_analysis(&p).unwrap();
        let mut errs = Vec::new();
        for z0 in [0.08, 0.04] {
            let bd = boundary_on_center_manifold(&p, z0).unwrap();
            let delta = bd.delta;
            let grid = Grid::new(22.0 / delta, 8001).unwrap();
            let prof = solve_stationary(&bd, &p, &grid).unwrap();
            let (zz, _) = eq.to_diagonal(bd.u_b + 1.0, bd.theta_b - 1.0);
            let flow = solve_center_flow(zz, &p, 22.0 / delta, 8001).unwrap();
            let rep = degenerate_structure(&prof, &flow, &p).unwrap();
            errs.push(rep.max_ux_ratio_error.unwrap());
        }
        assert!(
            errs[1] < 0.75 * errs[0],
            "structure error should shrink roughly like delta: {errs:?}"
        );
    }

    #[test]
    fn degenerate_structure_graceful_at_zero_delta() {
        let p = params(1.0);
        let grid = Grid::new(50.0, 501).unwrap();
        let prof = solve_stationary(&BoundaryData::far_field(), &p, &grid).unwrap();
        let flow = solve_center_flow(0.0, &p, 50.0, 501).unwrap();
        let rep = degenerate_structure(&prof, &flow, &p).unwrap();
        assert!(!rep.sufficient_signal);
        assert!(rep.max_ux_ratio_error.is_none());
    }
}
