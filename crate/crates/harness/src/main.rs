use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use halfspace_ns::config::load_config;
use halfspace_ns::{report, runner, sweep, HarnessError};

/// Numerical laboratory for outflow boundary-layer waves of a viscous
/// heat-conductive gas on the half line.
#[derive(Parser)]
#[command(name = "halfspace-ns", version, about)]
struct Cli {
    /// Run-configuration document (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dotted-path overrides, e.g. --set grid.n=4001 (repeatable).
    #[arg(long = "set", global = true)]
    set: Vec<String>,
    /// Output root (default: $HALFSPACE_NS_OUT or ./runs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Equilibrium eigenstructure, manifold coefficients, classification.
    Analyze,
    /// Solve the stationary profile and write profile.csv.
    Stationary,
    /// Classify the boundary data against the existence condition.
    Classify,
    /// Time-integrate a perturbed profile and write series.csv.
    Evolve,
    /// Evolve, then fit the temporal decay rate against the theorem target.
    RateStudy,
    /// Cross-product parameter sweep of another subcommand.
    Sweep {
        /// Axis spec path=v1,v2,... (repeatable).
        #[arg(long = "axis")]
        axis: Vec<String>,
        /// Operation to run per point.
        #[arg(long, default_value = "analyze")]
        op: String,
    },
    /// Merge every manifest under the output root into report.csv.
    Report,
}

fn out_root(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os("HALFSPACE_NS_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn require_config(cli: &Cli) -> Result<halfspace_ns::config::ValidatedConfig, HarnessError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    load_config(path, &cli.set, cli.seed)
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let root = out_root(cli);
    match &cli.cmd {
        Cmd::Analyze => {
            let cfg = require_config(cli)?;
            let dir = root.join(format!("analyze-{}", cfg.hash()));
            let m = runner::run_analyze(&cfg, &dir)?;
            println!("{}: regime {}, status {}", dir.display(), m.regime_str(), m.status);
            Ok(())
        }
        Cmd::Stationary => {
            let cfg = require_config(cli)?;
            let dir = root.join(format!("stationary-{}", cfg.hash()));
            let m = runner::run_stationary(&cfg, &dir)?;
            println!("{}: status {}", dir.display(), m.status);
            Ok(())
        }
        Cmd::Classify => {
            let cfg = require_config(cli)?;
            let dir = root.join(format!("classify-{}", cfg.hash()));
            let m = runner::run_classify(&cfg, &dir)?;
            let class = m
                .key_outputs
                .get("class")
                .and_then(|v| v.as_str())
                .unwrap_or("?");
            println!("{}: {class}", dir.display());
            Ok(())
        }
        Cmd::Evolve => {
            let cfg = require_config(cli)?;
            if cfg.params.regime() == halfspace_ns_core::model::FlowRegime::Transonic {
                eprintln!(
                    "note: transonic evolution is slow (algebraic decay needs long domains \
                     and times)"
                );
            }
            let dir = root.join(format!("evolve-{}", cfg.hash()));
            let m = runner::run_evolve(&cfg, &dir)?;
            println!("{}: status {}", dir.display(), m.status);
            Ok(())
        }
        Cmd::RateStudy => {
            let cfg = require_config(cli)?;
            let dir = root.join(format!("rate-study-{}", cfg.hash()));
            let m = runner::run_rate_study(&cfg, &dir)?;
            let verdict = m
                .key_outputs
                .get("verdict")
                .and_then(|v| v.as_str())
                .unwrap_or("?");
            println!("{}: verdict {verdict}", dir.display());
            Ok(())
        }
        Cmd::Sweep { axis, op } => {
            let cfg = require_config(cli)?;
            let axes: Vec<sweep::Axis> = axis
                .iter()
                .map(|a| sweep::parse_axis(a))
                .collect::<Result<_, _>>()?;
            let jobs = cli.jobs.unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            });
            let dir = root.join(format!("sweep-{}", cfg.hash()));
            let rows = sweep::run_sweep(&cfg.raw, &axes, op, &dir, jobs)?;
            let failures = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "{}: {} points, {} failed (see sweep.csv)",
                dir.display(),
                rows.len(),
                failures
            );
            Ok(())
        }
        Cmd::Report => {
            let table = report::write_report(&root)?;
            print!("{table}");
            Ok(())
        }
    }
}

trait RegimeStr {
    fn regime_str(&self) -> String;
}

impl RegimeStr for halfspace_ns::artifacts::RunManifest {
    fn regime_str(&self) -> String {
        serde_json::to_value(self.regime)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_else(|| "?".into())
    }
}
