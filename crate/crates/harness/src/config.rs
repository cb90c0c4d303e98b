//! Run-configuration document: a single JSON object with `gas`, `farfield`,
//! `mach`, `boundary`, `grid`, `evolve`, `perturbation`, `weights`, and
//! `seed` blocks. Dotted-path `--set key=value` overrides are applied to
//! the raw document before validation, so every derived quantity (run id
//! included) sees the final values.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use halfspace_ns_core::evolution::{
    FarFieldBc, FieldMask, Grid, PerturbationShape, PerturbationSpec, SchemeConfig, TimeIntegrator,
};
use halfspace_ns_core::model::{
    nondimensionalize, BoundaryData, DimensionlessParams, FarField, PhysicalGas,
};
use halfspace_ns_core::stationary::ClassifySettings;

use crate::{HarnessError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasBlock {
    pub gamma: f64,
    #[serde(default, rename = "R")]
    pub r: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub mu_hat: Option<f64>,
    #[serde(default)]
    pub kappa_hat: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldBlock {
    pub rho: f64,
    pub u: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryBlock {
    pub u_b: f64,
    pub theta_b: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub x_max: f64,
    pub n: usize,
}

fn default_cfl() -> f64 {
    0.4
}
fn default_diff_safety() -> f64 {
    0.4
}
fn default_integrator() -> TimeIntegrator {
    TimeIntegrator::Rk2
}
fn default_farfield_bc() -> FarFieldBc {
    FarFieldBc::Dirichlet
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveBlock {
    pub t_final: f64,
    pub sample_dt: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_diff_safety")]
    pub diff_safety: f64,
    #[serde(default = "default_integrator")]
    pub integrator: TimeIntegrator,
    #[serde(default = "default_farfield_bc")]
    pub farfield_bc: FarFieldBc,
    /// Length of the zero-perturbation relaxation that turns the ODE
    /// profile into the discrete steady reference. `None` selects
    /// `min(1.5 x_max, t_final)`.
    #[serde(default)]
    pub relax_t: Option<f64>,
    /// Emit full field dumps every this many time units.
    #[serde(default)]
    pub snapshot_dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsBlock {
    pub alpha: f64,
    #[serde(default)]
    pub zeta: Option<f64>,
}

impl Default for WeightsBlock {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            zeta: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyBlock {
    #[serde(default = "default_eps0")]
    pub smallness_eps0: f64,
    #[serde(default = "default_manifold_tol")]
    pub manifold_tol: f64,
}

fn default_eps0() -> f64 {
    0.2
}
fn default_manifold_tol() -> f64 {
    1e-6
}

impl Default for ClassifyBlock {
    fn default() -> Self {
        Self {
            smallness_eps0: default_eps0(),
            manifold_tol: default_manifold_tol(),
        }
    }
}

/// The raw run-configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gas: GasBlock,
    #[serde(default)]
    pub farfield: Option<FarFieldBlock>,
    #[serde(default)]
    pub mach: Option<f64>,
    pub boundary: BoundaryBlock,
    pub grid: GridBlock,
    pub evolve: EvolveBlock,
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub weights: WeightsBlock,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub classify: ClassifyBlock,
    #[serde(default)]
    pub transonic_tol: Option<f64>,
}

/// A validated configuration with every derived object constructed, plus
/// the canonical JSON it came from (used for hashing and the manifest).
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub raw: Value,
    pub config: RunConfig,
    pub params: DimensionlessParams,
    pub boundary: BoundaryData,
    pub grid: Grid,
    pub scheme: SchemeConfig,
    pub classify: ClassifySettings,
}

/// Parse `key=value` into a dotted path and a JSON value (numbers and
/// booleans are parsed, anything else stays a string).
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (key, val) = s
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("--set expects key=value, got '{s}'")))?;
    let v = match val {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        "null" => Value::Null,
        _ => val
            .parse::<f64>()
            .ok()
            .and_then(serde_json::Number::from_f64)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(val.to_string())),
    };
    Ok((key.to_string(), v))
}

/// Apply a dotted-path override to a JSON document, creating intermediate
/// objects as needed.
pub fn apply_override(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cursor = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let map = cursor.as_object_mut().ok_or_else(|| {
            HarnessError::Config(format!(
                "--set path '{path}' descends into a non-object at '{part}'"
            ))
        })?;
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cursor = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Load a configuration file, apply overrides, and validate.
pub fn load_config(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<ValidatedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: Value = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    for s in overrides {
        let (k, v) = parse_override(s)?;
        apply_override(&mut doc, &k, v)?;
    }
    if let Some(seed) = seed {
        apply_override(&mut doc, "seed", Value::from(seed))?;
    }
    validate(doc)
}

/// Validate a raw document into runnable objects. Error messages name the
/// offending field.
pub fn validate(doc: Value) -> Result<ValidatedConfig> {
    let config: RunConfig = serde_json::from_value(doc.clone())
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let cfg = |m: String| HarnessError::Config(m);

    if !(config.gas.gamma > 1.0) {
        return Err(cfg("gamma must exceed 1".into()));
    }
    let params = build_params(&config)?;
    let params = match config.transonic_tol {
        Some(tol) if tol >= 0.0 => params.with_transonic_tol(tol),
        Some(tol) => return Err(cfg(format!("transonic_tol must be >= 0, got {tol}"))),
        None => params,
    };
    let boundary = BoundaryData::new(config.boundary.u_b, config.boundary.theta_b)
        .map_err(|e| cfg(format!("boundary: {e}")))?;
    let grid = Grid::new(config.grid.x_max, config.grid.n)
        .map_err(|e| cfg(format!("grid: {e}")))?;
    let scheme = SchemeConfig {
        cfl: config.evolve.cfl,
        diff_safety: config.evolve.diff_safety,
        integrator: config.evolve.integrator,
        farfield_bc: config.evolve.farfield_bc,
    };
    scheme.validate().map_err(|e| cfg(format!("evolve: {e}")))?;
    if !(config.evolve.t_final > 0.0) {
        return Err(cfg("evolve.t_final must be positive".into()));
    }
    if !(config.evolve.sample_dt > 0.0) {
        return Err(cfg("evolve.sample_dt must be positive".into()));
    }
    if let Some(r) = config.evolve.relax_t {
        if r < 0.0 {
            return Err(cfg("evolve.relax_t must be >= 0".into()));
        }
    }
    if !(config.weights.alpha >= 0.0) {
        return Err(cfg("weights.alpha must be >= 0".into()));
    }
    if let Some(z) = config.weights.zeta {
        if z < 0.0 {
            return Err(cfg("weights.zeta must be >= 0".into()));
        }
    }
    match config.perturbation.shape {
        PerturbationShape::AlgebraicTail { exponent } => {
            if !(exponent > 0.5) {
                return Err(cfg(
                    "perturbation.shape.exponent must exceed 0.5 (L2 membership)".into(),
                ));
            }
        }
        PerturbationShape::GaussianBump { width, .. } => {
            if !(width > 0.0) {
                return Err(cfg("perturbation.shape.width must be positive".into()));
            }
        }
        PerturbationShape::Compact { cutoff } => {
            if !(cutoff > 0.0 && cutoff <= config.grid.x_max) {
                return Err(cfg(
                    "perturbation.shape.cutoff must lie in (0, x_max]".into(),
                ));
            }
        }
    }
    let classify = ClassifySettings {
        smallness_eps0: config.classify.smallness_eps0,
        manifold_tol: config.classify.manifold_tol,
    };
    if !(classify.smallness_eps0 > 0.0) {
        return Err(cfg("classify.smallness_eps0 must be positive".into()));
    }
    if !(classify.manifold_tol > 0.0) {
        return Err(cfg("classify.manifold_tol must be positive".into()));
    }
    // Transonic runs want delta x_max >= 20 for a settled algebraic tail;
    // warn (in the manifest) rather than reject.
    Ok(ValidatedConfig {
        raw: doc,
        config,
        params,
        boundary,
        grid,
        scheme,
        classify,
    })
}

fn build_params(config: &RunConfig) -> Result<DimensionlessParams> {
    let gas = &config.gas;
    let physical = gas.r.is_some() || gas.mu.is_some() || gas.kappa.is_some();
    let dimensionless = gas.mu_hat.is_some() || gas.kappa_hat.is_some();
    if physical && dimensionless {
        return Err(HarnessError::Config(
            "gas: give either physical (R, mu, kappa) or dimensionless (mu_hat, kappa_hat) \
             constants, not both"
                .into(),
        ));
    }
    if physical {
        let (Some(r), Some(mu), Some(kappa)) = (gas.r, gas.mu, gas.kappa) else {
            return Err(HarnessError::Config(
                "gas: the physical path needs all of R, mu, kappa".into(),
            ));
        };
        let Some(ff) = config.farfield else {
            return Err(HarnessError::Config(
                "farfield block is required with physical gas constants".into(),
            ));
        };
        let gas = PhysicalGas::new(r, gas.gamma, mu, kappa)
            .map_err(|e| HarnessError::Config(format!("gas: {e}")))?;
        let far = FarField::new(ff.rho, ff.u, ff.theta)
            .map_err(|e| HarnessError::Config(format!("farfield: {e}")))?;
        if config.mach.is_some() {
            return Err(HarnessError::Config(
                "mach must not be given with physical gas constants (it is derived)".into(),
            ));
        }
        nondimensionalize(&gas, &far).map_err(|e| HarnessError::Config(e.to_string()))
    } else {
        let (Some(mu_hat), Some(kappa_hat)) = (gas.mu_hat, gas.kappa_hat) else {
            return Err(HarnessError::Config(
                "gas: the dimensionless path needs mu_hat and kappa_hat".into(),
            ));
        };
        let Some(mach) = config.mach else {
            return Err(HarnessError::Config(
                "mach is required with dimensionless gas constants".into(),
            ));
        };
        DimensionlessParams::from_dimensionless(gas.gamma, mu_hat, kappa_hat, mach)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

impl ValidatedConfig {
    /// Canonical JSON string of the post-override document (serde_json maps
    /// are ordered, so this is stable).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.raw).expect("config value serializes")
    }

    /// First 12 hex digits of the SHA-256 of the canonical configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    pub fn relax_t(&self) -> f64 {
        self.config
            .evolve
            .relax_t
            .unwrap_or_else(|| (1.5 * self.grid.x_max).min(self.config.evolve.t_final))
    }

    pub fn perturbation(&self) -> PerturbationSpec {
        self.perturbation_with_fields(self.config.perturbation.fields)
    }

    fn perturbation_with_fields(&self, fields: FieldMask) -> PerturbationSpec {
        PerturbationSpec {
            amplitude: self.config.perturbation.amplitude,
            shape: self.config.perturbation.shape,
            fields,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_doc() -> Value {
        serde_json::json!({
            "gas": {"gamma": 5.0/3.0, "mu_hat": 1.0, "kappa_hat": 1.0},
            "mach": 2.0,
            "boundary": {"u_b": -1.05, "theta_b": 1.0},
            "grid": {"x_max": 50.0, "n": 1001},
            "evolve": {"t_final": 10.0, "sample_dt": 0.5},
            "perturbation": {"amplitude": 0.01,
                              "shape": {"kind": "gaussian_bump", "center": 5.0, "width": 1.0},
                              "fields": {"rho": true, "u": true, "theta": true}},
            "weights": {"alpha": 2.0},
            "seed": 7
        })
    }

    #[test]
    fn valid_document_builds() {
        let v = validate(base_doc()).unwrap();
        assert_eq!(v.config.seed, 7);
        assert!((v.params.mach - 2.0).abs() < 1e-15);
        assert_eq!(v.grid.n, 1001);
    }

    #[test]
    fn gamma_message_names_field() {
        let mut doc = base_doc();
        apply_override(&mut doc, "gas.gamma", Value::from(0.9)).unwrap();
        let err = validate(doc).unwrap_err();
        assert!(err.to_string().contains("gamma must exceed 1"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn override_parsing() {
        let (k, v) = parse_override("grid.n=2001").unwrap();
        assert_eq!(k, "grid.n");
        assert_eq!(v, Value::from(2001.0));
        let (_, v) = parse_override("evolve.integrator=rk4").unwrap();
        assert_eq!(v, Value::from("rk4"));
        assert!(parse_override("no-equals").is_err());
    }

    #[test]
    fn physical_path_matches_dimensionless() {
        let doc = serde_json::json!({
            "gas": {"gamma": 2.0, "R": 0.5, "mu": 1.0, "kappa": 1.0},
            "farfield": {"rho": 1.0, "u": -1.0, "theta": 1.0},
            "boundary": {"u_b": -1.0, "theta_b": 1.0},
            "grid": {"x_max": 50.0, "n": 1001},
            "evolve": {"t_final": 1.0, "sample_dt": 0.5},
            "perturbation": {"amplitude": 0.0,
                              "shape": {"kind": "compact", "cutoff": 10.0}}
        });
        let v = validate(doc).unwrap();
        assert!((v.params.mach - 1.0).abs() < 1e-15);
        assert!((v.params.mu_hat - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = validate(base_doc()).unwrap();
        let b = validate(base_doc()).unwrap();
        assert_eq!(a.hash(), b.hash());
        let mut doc = base_doc();
        apply_override(&mut doc, "seed", Value::from(8)).unwrap();
        let c = validate(doc).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
