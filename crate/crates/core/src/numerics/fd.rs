//! Finite-difference derivatives on uniform grids: second-order central
//! stencils in the interior, second-order one-sided stencils at the ends.

/// First derivative of the sampled function `f` with spacing `dx`.
pub fn derivative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 3 {
        if n == 2 {
            let s = (f[1] - f[0]) / dx;
            d[0] = s;
            d[1] = s;
        }
        return d;
    }
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * dx);
    }
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    d
}

/// Second derivative of the sampled function `f` with spacing `dx`.
pub fn second_derivative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    if n < 4 {
        return d;
    }
    let dx2 = dx * dx;
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / dx2;
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / dx2;
    }
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / dx2;
    d
}
