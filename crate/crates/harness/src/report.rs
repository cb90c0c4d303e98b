//! Aggregate manifests under an output root into a single table.

use std::path::{Path, PathBuf};

use crate::artifacts::{load_json, RunManifest};
use crate::Result;

/// Recursively collect every `manifest.json` under `root`.
pub fn collect_manifests(root: &Path) -> Result<Vec<(PathBuf, RunManifest)>> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(_) => continue,
        };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "manifest.json") {
                if let Ok(m) = load_json::<RunManifest>(&path) {
                    found.push((path, m));
                }
            }
        }
    }
    // Deterministic order for the report table.
    found.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(found)
}

/// Render `report.csv` and return its text (also printed by the CLI).
pub fn write_report(root: &Path) -> Result<String> {
    let manifests = collect_manifests(root)?;
    let mut columns: Vec<String> = Vec::new();
    for (_, m) in &manifests {
        for k in m.key_outputs.keys() {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    columns.sort();
    let mut out = String::from("run_id,subcommand,regime,delta,status");
    for c in &columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (_, m) in &manifests {
        out.push_str(&format!(
            "{},{},{},{},{}",
            m.run_id,
            m.subcommand,
            serde_json::to_value(m.regime).unwrap().as_str().unwrap_or("?"),
            m.delta,
            m.status.replace(',', ";")
        ));
        for c in &columns {
            out.push(',');
            if let Some(v) = m.key_outputs.get(c) {
                match v {
                    serde_json::Value::String(s) => out.push_str(s),
                    other => out.push_str(&other.to_string()),
                }
            }
        }
        out.push('\n');
    }
    std::fs::write(root.join("report.csv"), &out)?;
    Ok(out)
}
