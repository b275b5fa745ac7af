use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};
use rigidflock::output::{write_outputs, Summary};
use rigidflock::scenario::FormationSpec;
use rigidflock::{load_scenario, Error as SimError, ScenarioError};

const EXIT_OK: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_NOT_RIGID: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

/// Rigid-graph flocking and target interception with unicycle agents.
#[derive(Parser)]
#[command(version, about, after_help = "Exit codes: 0 ok, 1 error, 2 not rigid, 3 simulation diverged.\nSet RIGIDFLOCK_LOG=info|debug for progress output.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trajectory.csv, metrics.csv and summary.json.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override integration.duration_s.
        #[arg(long, value_name = "SECONDS")]
        duration: Option<f64>,
        /// Override integration.dt_s.
        #[arg(long, value_name = "SECONDS")]
        dt: Option<f64>,
        /// Override the seed of a perturbed initial condition.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Report the rank test for a formation (or the formation of a scenario).
    CheckRigidity { file: PathBuf },
}

enum Outcome {
    Done,
    NotRigid,
    Diverged,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RIGIDFLOCK_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    let result = match cli.command {
        Command::Simulate {
            scenario,
            out,
            duration,
            dt,
            seed,
        } => simulate(&scenario, &out, duration, dt, seed),
        Command::CheckRigidity { file } => check_rigidity(&file),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::from(EXIT_OK),
        Ok(Outcome::NotRigid) => ExitCode::from(EXIT_NOT_RIGID),
        Ok(Outcome::Diverged) => ExitCode::from(EXIT_DIVERGED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn simulate(
    path: &Path,
    out: &Path,
    duration: Option<f64>,
    dt: Option<f64>,
    seed: Option<u64>,
) -> Result<Outcome> {
    let scenario = load_scenario(path)?.with_overrides(duration, dt, seed)?;
    for w in &scenario.warnings {
        eprintln!("warning: {w}");
    }
    info!(
        "running {} agents for {} s at dt = {} s",
        scenario.n(),
        scenario.file.integration.duration_s,
        scenario.file.integration.dt_s
    );
    let mut log = match scenario.simulation::<f64>().run() {
        Ok(log) => log,
        Err(e @ SimError::SimulationDiverged { .. }) => {
            eprintln!("error: {e}");
            return Ok(Outcome::Diverged);
        }
        Err(e) => return Err(e.into()),
    };
    if log.heading_jumps > 0 {
        warn!("desired heading jumped by more than pi/2 on {} steps", log.heading_jumps);
    }
    // A zero-length run produces header-only files.
    if scenario.file.integration.duration_s == 0.0 {
        log.rows.clear();
    }
    let summary = Summary {
        scenario: scenario.file.name.clone(),
        notes: scenario.file.notes.clone(),
        warnings: scenario.warnings.clone(),
        ..Summary::from_log(&log, scenario.formation.distances(), scenario.file.integration.settle_time_s)
    };
    write_outputs(out, &log, &summary).with_context(|| format!("writing outputs to {}", out.display()))?;
    info!("wrote {} rows to {}", log.rows.len(), out.display());
    Ok(Outcome::Done)
}

fn check_rigidity(path: &Path) -> Result<Outcome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let rank_tol = value.get("rank_tol").and_then(serde_json::Value::as_f64);
    if let Some(formation) = value.get_mut("formation") {
        value = formation.take();
    }
    let spec: FormationSpec =
        serde_json::from_value(value).map_err(ScenarioError::from).with_context(|| format!("parsing {}", path.display()))?;
    let report = spec.rigidity_report(rank_tol.unwrap_or(1e-10))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.passes() { Outcome::Done } else { Outcome::NotRigid })
}
