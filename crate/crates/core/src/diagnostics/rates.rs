//! Temporal (and spatial) decay-rate fitting in transformed coordinates.

use serde::{Deserialize, Serialize};

use crate::numerics::linear_fit;
use crate::{Error, Result};

/// Decay model fitted to a positive series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    /// `value ~ C (1 + t)^{exponent}`; fitted in `log value` vs
    /// `log(1 + t)`. The stored number is the (signed) exponent.
    Algebraic,
    /// `value ~ C exp(-rate t)`; fitted in `log value` vs `t`. The stored
    /// number is the (positive, for decay) rate.
    Exponential,
}

/// A fitted decay law with its window and quality.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    /// Algebraic exponent, or exponential decay rate (see [`RateModel`]).
    pub exponent_or_rate: f64,
    /// Window `[t_lo, t_hi]` actually used by the fit.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub n_samples: usize,
}

/// Least-squares decay fit of `(t, value)` samples.
///
/// The window drops the first 20% of the transformed abscissa range (the
/// initial transient) and every sample below ten times `floor` (the
/// truncation floor of the scheme, typically estimated from a
/// zero-perturbation control run). Algebraic fits additionally require at
/// least ten surviving samples spanning a decade of `1 + t`.
pub fn fit_rate(series: &[(f64, f64)], model: RateModel, floor: f64) -> Result<RateFit> {
    let cutoff = 10.0 * floor;
    let kept: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, v)| t >= 0.0 && v > cutoff && v > 0.0)
        .collect();
    if kept.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} samples above the floor {floor:.3e}",
            kept.len()
        )));
    }
    let transform = |t: f64| match model {
        RateModel::Algebraic => (1.0 + t).ln(),
        RateModel::Exponential => t,
    };
    let x_all: Vec<f64> = kept.iter().map(|&(t, _)| transform(t)).collect();
    let x_lo = x_all.iter().copied().fold(f64::INFINITY, f64::min);
    let x_hi = x_all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let x_start = x_lo + 0.2 * (x_hi - x_lo);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut window = (f64::INFINITY, f64::NEG_INFINITY);
    for (&(t, v), &x) in kept.iter().zip(&x_all) {
        if x >= x_start {
            xs.push(x);
            ys.push(v.ln());
            window.0 = window.0.min(t);
            window.1 = window.1.max(t);
        }
    }
    match model {
        RateModel::Algebraic => {
            let span = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - xs.iter().copied().fold(f64::INFINITY, f64::min);
            if xs.len() < 10 || span < 10f64.ln() {
                return Err(Error::InsufficientData(format!(
                    "algebraic fit needs >= 10 samples over a decade of (1+t); \
                     got {} samples spanning {:.2} decades",
                    xs.len(),
                    span / 10f64.ln()
                )));
            }
        }
        RateModel::Exponential => {
            if xs.len() < 5 {
                return Err(Error::InsufficientData(format!(
                    "exponential fit needs >= 5 samples, got {}",
                    xs.len()
                )));
            }
        }
    }
    let fit = linear_fit(&xs, &ys)?;
    let exponent_or_rate = match model {
        RateModel::Algebraic => fit.slope,
        RateModel::Exponential => -fit.slope,
    };
    Ok(RateFit {
        model,
        exponent_or_rate,
        window,
        r_squared: fit.r_squared,
        n_samples: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_algebraic_exponent() {
        let series: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let t = k as f64 * 0.5;
                (t, 4.0 * (1.0 + t).powi(-1))
            })
            .collect();
        let fit = fit_rate(&series, RateModel::Algebraic, 0.0).unwrap();
        assert!((fit.exponent_or_rate + 1.0).abs() < 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn recovers_exponential_rate() {
        let series: Vec<(f64, f64)> = (0..100)
            .map(|k| {
                let t = k as f64 * 0.3;
                (t, 2.0 * (-0.3 * t).exp())
            })
            .collect();
        let fit = fit_rate(&series, RateModel::Exponential, 0.0).unwrap();
        assert!((fit.exponent_or_rate - 0.3).abs() < 1e-12);
    }

    #[test]
    fn floor_excludes_saturated_tail() {
        // value decays to a floor of 1e-6; the fit must ignore it
        let series: Vec<(f64, f64)> = (0..400)
            .map(|k| {
                let t = k as f64 * 0.5;
                (t, (1.0 + t).powi(-2) + 1e-6)
            })
            .collect();
        let fit = fit_rate(&series, RateModel::Algebraic, 1e-6).unwrap();
        assert!(
            (fit.exponent_or_rate + 2.0).abs() < 0.1,
            "exponent {}",
            fit.exponent_or_rate
        );
    }

    #[test]
    fn insufficient_span_errors() {
        let series: Vec<(f64, f64)> = (0..20)
            .map(|k| {
                let t = k as f64 * 0.01;
                (t, (1.0 + t).powi(-1))
            })
            .collect();
        assert!(matches!(
            fit_rate(&series, RateModel::Algebraic, 0.0),
            Err(Error::InsufficientData(_))
        ));
    }
}
