//! Least-squares helpers: straight lines and polynomial fits with a fixed
//! power basis.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Result of a straight-line least-squares fit `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares for a line. Requires at least two distinct
/// abscissae.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "linear fit needs >= 2 paired samples, got {}",
            xs.len().min(ys.len())
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "linear fit abscissae are all identical".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        n: xs.len(),
    })
}

/// Least-squares fit of `y ~ sum_k c_k x^{powers[k]}` (no constant term
/// unless 0 is listed). Returns the coefficients in the order of `powers`.
pub fn poly_fit_powers(xs: &[f64], ys: &[f64], powers: &[u32]) -> Result<Vec<f64>> {
    if xs.len() != ys.len() || xs.len() < powers.len() {
        return Err(Error::InsufficientData(format!(
            "polynomial fit with {} basis functions needs at least as many samples, got {}",
            powers.len(),
            xs.len().min(ys.len())
        )));
    }
    let m = xs.len();
    let k = powers.len();
    let mut a = DMatrix::zeros(m, k);
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in powers.iter().enumerate() {
            a[(i, j)] = x.powi(p as i32);
        }
    }
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let sol = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::Numerical(format!("polynomial fit SVD failed: {e}")))?;
    Ok(sol.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -1.5 * x + 0.25).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-13);
        assert!((fit.intercept - 0.25).abs() < 1e-13);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn recovers_quadratic_cubic_coefficients() {
        let xs: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x * x - 3.0 * x1(*x)).collect();
        fn x1(x: f64) -> f64 {
            x * x * x
        }
        let c = poly_fit_powers(&xs, &ys, &[2, 3]).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-10);
        assert!((c[1] + 3.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(linear_fit(&[1.0], &[2.0]).is_err());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_err());
    }
}
