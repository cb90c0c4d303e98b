//! Adaptive Dormand-Prince 5(4) integration for small fixed-size systems.

use crate::{Error, Result};

/// Tolerances and step-size limits for [`Rk45`].
#[derive(Debug, Clone, Copy)]
pub struct Rk45Options {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_initial: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Rk45Options {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            h_initial: 1e-4,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Embedded Dormand-Prince integrator over `[f64; N]` states.
///
/// Steps never pass a requested output point, so sampled values carry the
/// full integration accuracy without dense-output interpolation.
pub struct Rk45<const N: usize, F>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    f: F,
    pub opts: Rk45Options,
}

impl<const N: usize, F> Rk45<N, F>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    pub fn new(f: F, opts: Rk45Options) -> Self {
        Self { f, opts }
    }

    /// Integrate from `(x0, y0)` and sample the solution at every point of
    /// `xs` (must be increasing, `xs[0] >= x0`). Returns one state per
    /// sample point.
    pub fn sample_at(&mut self, x0: f64, y0: [f64; N], xs: &[f64]) -> Result<Vec<[f64; N]>> {
        let mut out = Vec::with_capacity(xs.len());
        let mut x = x0;
        let mut y = y0;
        let mut h = self.opts.h_initial;
        let mut steps = 0usize;
        for &target in xs {
            if target < x - 1e-14 {
                return Err(Error::Domain(format!(
                    "sample points must be increasing (got {target} after {x})"
                )));
            }
            while x < target {
                let h_try = h.min(target - x);
                let (y_new, h_next, accepted) = self.try_step(x, &y, h_try)?;
                if accepted {
                    x += h_try;
                    y = y_new;
                }
                // Step-size proposal is not capped by the output distance.
                h = h_next.min(self.opts.h_max).max(self.opts.h_min);
                steps += 1;
                if steps > self.opts.max_steps {
                    return Err(Error::NonConvergence(format!(
                        "rk45 exceeded {} steps before x = {target}",
                        self.opts.max_steps
                    )));
                }
            }
            out.push(y);
        }
        Ok(out)
    }

    /// Integrate with adaptive steps, recording `(x, y)` after every
    /// accepted step (including the initial state), until either `x_end` is
    /// reached or `stop` returns true for the current state.
    pub fn trace_until(
        &mut self,
        x0: f64,
        y0: [f64; N],
        x_end: f64,
        mut stop: impl FnMut(f64, &[f64; N]) -> bool,
    ) -> Result<Vec<(f64, [f64; N])>> {
        let mut path = vec![(x0, y0)];
        let mut x = x0;
        let mut y = y0;
        let mut h = self.opts.h_initial;
        let mut steps = 0usize;
        while x < x_end && !stop(x, &y) {
            let h_try = h.min(x_end - x);
            let (y_new, h_next, accepted) = self.try_step(x, &y, h_try)?;
            if accepted {
                x += h_try;
                y = y_new;
                path.push((x, y));
            }
            h = h_next.min(self.opts.h_max).max(self.opts.h_min);
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::NonConvergence(format!(
                    "rk45 exceeded {} steps at x = {x}",
                    self.opts.max_steps
                )));
            }
        }
        Ok(path)
    }

    /// One trial step of size `h`. Returns the 5th-order state, a proposed
    /// next step size, and whether the error test passed.
    fn try_step(&mut self, x: f64, y: &[f64; N], h: f64) -> Result<([f64; N], f64, bool)> {
        let mut k = [[0.0; N]; 7];
        k[0] = (self.f)(x, y)?;
        for s in 1..7 {
            let mut ys = *y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s] = (self.f)(x + C[s] * h, &ys)?;
        }
        let mut y5 = *y;
        let mut err = [0.0; N];
        for (s, ks) in k.iter().enumerate() {
            for i in 0..N {
                y5[i] += h * B5[s] * ks[i];
                err[i] += h * (B5[s] - B4[s]) * ks[i];
            }
        }
        let mut err_norm = 0.0;
        for i in 0..N {
            let scale = self.opts.abs_tol + self.opts.rel_tol * y[i].abs().max(y5[i].abs());
            err_norm += (err[i] / scale) * (err[i] / scale);
        }
        err_norm = (err_norm / N as f64).sqrt();
        if !err_norm.is_finite() {
            return Err(Error::Numerical(format!("rk45 produced NaN near x = {x}")));
        }
        let accepted = err_norm <= 1.0;
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        Ok((y5, h * factor, accepted))
    }
}
