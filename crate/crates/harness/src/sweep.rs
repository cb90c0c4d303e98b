//! Parameter sweeps: a cross product of dotted-path axes, each point run
//! independently (and concurrently), merged into one CSV ordered by axis
//! values regardless of completion order.

use std::path::Path;

use rayon::prelude::*;
use serde_json::Value;

use crate::config::{apply_override, validate, ValidatedConfig};
use crate::runner;
use crate::{HarnessError, Result};

/// One sweep axis: a dotted config path and its values.
#[derive(Debug, Clone)]
pub struct Axis {
    pub path: String,
    pub values: Vec<Value>,
}

/// Parse `--axis path=v1,v2,v3`.
pub fn parse_axis(s: &str) -> Result<Axis> {
    let (path, vals) = s
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("--axis expects path=v1,v2,..., got '{s}'")))?;
    let values: Vec<Value> = vals
        .split(',')
        .map(|v| {
            v.parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(v.to_string()))
        })
        .collect();
    if values.is_empty() {
        return Err(HarnessError::Config(format!("--axis '{path}' has no values")));
    }
    Ok(Axis {
        path: path.to_string(),
        values,
    })
}

/// Outcome of one sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub coords: Vec<(String, Value)>,
    pub status: String,
    pub key_outputs: std::collections::BTreeMap<String, Value>,
}

fn cross_product(axes: &[Axis]) -> Vec<Vec<(String, Value)>> {
    let mut points: Vec<Vec<(String, Value)>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for v in &axis.values {
                let mut q = p.clone();
                q.push((axis.path.clone(), v.clone()));
                next.push(q);
            }
        }
        points = next;
    }
    points
}

fn run_point(op: &str, cfg: &ValidatedConfig, dir: &Path) -> Result<std::collections::BTreeMap<String, Value>> {
    let manifest = match op {
        "analyze" => runner::run_analyze(cfg, dir)?,
        "classify" => runner::run_classify(cfg, dir)?,
        "stationary" => runner::run_stationary(cfg, dir)?,
        "evolve" => runner::run_evolve(cfg, dir)?,
        "rate-study" => runner::run_rate_study(cfg, dir)?,
        other => {
            return Err(HarnessError::Config(format!(
                "sweep op must be one of analyze|classify|stationary|evolve|rate-study, got '{other}'"
            )))
        }
    };
    Ok(manifest.key_outputs)
}

/// Run the sweep. Points execute concurrently; failures are recorded per
/// point and the sweep continues.
pub fn run_sweep(
    base: &Value,
    axes: &[Axis],
    op: &str,
    dir: &Path,
    jobs: usize,
) -> Result<Vec<SweepRow>> {
    if axes.is_empty() {
        return Err(HarnessError::Config("sweep needs at least one --axis".into()));
    }
    std::fs::create_dir_all(dir)?;
    let points = cross_product(axes);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Numerical(format!("thread pool: {e}")))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, coords)| {
                let mut doc = base.clone();
                let mut status = "ok".to_string();
                let mut key_outputs = std::collections::BTreeMap::new();
                for (path, v) in coords {
                    if let Err(e) = apply_override(&mut doc, path, v.clone()) {
                        status = format!("error: {e}");
                    }
                }
                if status == "ok" {
                    match validate(doc) {
                        Ok(cfg) => {
                            let point_dir = dir.join(format!("points/p{index:04}"));
                            match run_point(op, &cfg, &point_dir) {
                                Ok(outputs) => key_outputs = outputs,
                                Err(e) => status = format!("error: {e}"),
                            }
                        }
                        Err(e) => status = format!("error: {e}"),
                    }
                }
                SweepRow {
                    index,
                    coords: coords.clone(),
                    status,
                    key_outputs,
                }
            })
            .collect()
    });
    // Deterministic merge order: by point index (the cross product is
    // generated in axis order).
    rows.sort_by_key(|r| r.index);
    write_sweep_csv(&dir.join("sweep.csv"), axes, &rows)?;
    Ok(rows)
}

fn value_to_csv(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_sweep_csv(path: &Path, axes: &[Axis], rows: &[SweepRow]) -> Result<()> {
    // Column union over all points keeps the table rectangular even when
    // some points failed before producing outputs.
    let mut columns: Vec<String> = Vec::new();
    for r in rows {
        for k in r.key_outputs.keys() {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    columns.sort();
    let mut out = String::from("point");
    for a in axes {
        out.push(',');
        out.push_str(&a.path);
    }
    out.push_str(",status");
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("p{:04}", r.index));
        for (_p, v) in &r.coords {
            out.push(',');
            out.push_str(&value_to_csv(v));
        }
        out.push(',');
        out.push_str(&r.status.replace(',', ";"));
        for c in &columns {
            out.push(',');
            if let Some(v) = r.key_outputs.get(c) {
                out.push_str(&value_to_csv(v));
            }
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
