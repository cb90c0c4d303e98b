//! Composite trapezoid quadrature on uniform grids.

/// Trapezoid rule for samples `f` spaced `dx` apart.
pub fn trapezoid(f: &[f64], dx: f64) -> f64 {
    match f.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = f[1..n - 1].iter().sum();
            dx * (0.5 * (f[0] + f[n - 1]) + interior)
        }
    }
}
