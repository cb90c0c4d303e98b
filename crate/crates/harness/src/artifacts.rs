//! On-disk artifact schemas and their loaders. Every file written by the
//! runner round-trips through these types.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use halfspace_ns_core::diagnostics::RateFit;
use halfspace_ns_core::model::FlowRegime;
use halfspace_ns_core::stationary::{Classification, ManifoldExpansion};

use crate::{HarnessError, Result};

pub const MANIFEST_SCHEMA: &str = "halfspace-ns/manifest/v1";

/// `equilibrium.json`: the linear algebra at the far-field equilibrium plus
/// the boundary classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumArtifact {
    pub gamma: f64,
    pub mu_hat: f64,
    pub kappa_hat: f64,
    pub mach: f64,
    pub prandtl: f64,
    pub d: f64,
    pub regime: FlowRegime,
    /// Row-major 2x2 Jacobian entries.
    pub jacobian: [[f64; 2]; 2],
    pub lambda1: f64,
    pub lambda2: f64,
    pub r1: [f64; 2],
    pub r2: [f64; 2],
    pub det_p: f64,
    pub trace_det_coefficients: [f64; 3],
    /// Closed-form invariant-manifold coefficients (transonic only).
    pub manifold: Option<ManifoldExpansion>,
    pub classification: Classification,
}

/// `stationary.json`: profile-level summary next to `profile.csv`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryArtifact {
    pub regime: FlowRegime,
    pub delta: f64,
    pub residual: f64,
    pub mass_flux_defect: f64,
    pub decay: Option<RateFit>,
    pub u_b: f64,
    pub theta_b: f64,
    pub x_max: f64,
    pub n: usize,
}

/// `rates.json`: the decay-rate verdict of a rate study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatesArtifact {
    pub regime: FlowRegime,
    pub alpha: f64,
    pub zeta: Option<f64>,
    pub fit: RateFit,
    /// Theoretical exponent target (algebraic studies only).
    pub target: Option<f64>,
    /// Accepted exponent band around the target.
    pub band: Option<(f64, f64)>,
    pub floor: f64,
    pub verdict: RateVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateVerdict {
    Pass,
    Fail,
    Inconclusive,
    /// Exponential-mode studies report the fitted rate without a pinned
    /// theoretical target.
    Reported,
}

/// One row of the beta sample table in `forms.json`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AHatSample {
    pub beta: f64,
    pub a_hat_11: f64,
}

/// `forms.json`: quadratic-form spectral data and positivity verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormsArtifact {
    pub gamma: f64,
    pub mach: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub q1: [f64; 3],
    pub h: f64,
    pub a_hat_samples: Vec<AHatSample>,
    /// Bracketing interval of the `a_hat_11` sign change.
    pub a_hat_root_bracket: (f64, f64),
    pub f1_min_eigenvalue: f64,
    pub f1_positive_definite: bool,
    pub f2_min_eigenvalue: f64,
    pub f2_positive_definite: bool,
}

/// `series.csv` rows, kept in memory for fitting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub sup_norm: f64,
    pub l2: f64,
    pub l2_alpha: f64,
    pub h1: f64,
    pub energy: f64,
    pub mass_residual: f64,
}

/// `manifest.json`: one record per run directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub run_id: String,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub regime: FlowRegime,
    pub delta: f64,
    pub status: String,
    pub warnings: Vec<String>,
    pub key_outputs: BTreeMap<String, serde_json::Value>,
    pub wall_clock_ms: u64,
    pub artifacts: Vec<String>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| HarnessError::Io(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| HarnessError::Io(format!("parse {}: {e}", path.display())))
}

/// Write `series.csv` with the documented column header.
pub fn write_series_csv(path: &Path, rows: &[SeriesRow]) -> Result<()> {
    let mut out = String::from("t,sup_norm,l2,l2_alpha,h1,energy,mass_residual\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t, r.sup_norm, r.l2, r.l2_alpha, r.h1, r.energy, r.mass_residual
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_series_csv(path: &Path) -> Result<Vec<SeriesRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "t,sup_norm,l2,l2_alpha,h1,energy,mass_residual" {
                return Err(HarnessError::Io(format!(
                    "{}: unexpected series header '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(HarnessError::Io(format!(
                "{}: row {i} has {} fields",
                path.display(),
                fields.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| HarnessError::Io(format!("{}: row {i}: {e}", path.display())))
        };
        rows.push(SeriesRow {
            t: parse(fields[0])?,
            sup_norm: parse(fields[1])?,
            l2: parse(fields[2])?,
            l2_alpha: parse(fields[3])?,
            h1: parse(fields[4])?,
            energy: parse(fields[5])?,
            mass_residual: parse(fields[6])?,
        });
    }
    Ok(rows)
}

/// Write `profile.csv` with the documented column header.
pub fn write_profile_csv(path: &Path, p: &halfspace_ns_core::stationary::StationaryProfile) -> Result<()> {
    let mut out = String::from("x,rho,u,theta,u_x,theta_x\n");
    for i in 0..p.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.x[i], p.rho[i], p.u[i], p.theta[i], p.u_x[i], p.theta_x[i]
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Columns of `profile.csv` loaded back.
#[derive(Debug, Clone, Default)]
pub struct ProfileTable {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub u_x: Vec<f64>,
    pub theta_x: Vec<f64>,
}

pub fn load_profile_csv(path: &Path) -> Result<ProfileTable> {
    let text = std::fs::read_to_string(path)?;
    let mut t = ProfileTable::default();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "x,rho,u,theta,u_x,theta_x" {
                return Err(HarnessError::Io(format!(
                    "{}: unexpected profile header '{line}'",
                    path.display()
                )));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(HarnessError::Io(format!(
                "{}: row {i} has {} fields",
                path.display(),
                f.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| HarnessError::Io(format!("{}: row {i}: {e}", path.display())))
        };
        t.x.push(parse(f[0])?);
        t.rho.push(parse(f[1])?);
        t.u.push(parse(f[2])?);
        t.theta.push(parse(f[3])?);
        t.u_x.push(parse(f[4])?);
        t.theta_x.push(parse(f[5])?);
    }
    Ok(t)
}
