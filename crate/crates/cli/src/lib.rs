//! Library side of the `hbvm` command: configuration, experiment runners and writers.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};

use config::{merged_table, parse_overrides, ConfigError, Kind, RunConfig};
use hbvm_core::NewtonReport;

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged = 0,
    ConfigError = 1,
    NewtonFailure = 2,
}

fn newton_json(r: &NewtonReport) -> Value {
    json!({
        "iterations": r.iterations,
        "converged": r.converged,
        "final_residual": r.final_residual(),
        "residual_history": r.residual_history,
        "update_history": r.update_history,
        "damping_events": r.damping_events,
        "lstsq_residual": r.lstsq_residual,
        "cond_estimates": r.cond_estimates,
    })
}

/// Splits the arguments after the kind into an optional config path and overrides.
///
/// The config file is either the first argument (when it is not a flag) or `--config PATH`.
pub fn load_config(kind: Kind, args: &[String]) -> Result<RunConfig, ConfigError> {
    let (mut file, rest) = match args.first() {
        Some(a) if !a.starts_with("--") => (Some(PathBuf::from(a)), &args[1..]),
        _ => (None, args),
    };
    let mut overrides = parse_overrides(rest)?;
    if let Some(i) = overrides.iter().position(|(k, _)| k == "config") {
        let (_, v) = overrides.remove(i);
        let path = v.as_str().map(PathBuf::from).ok_or_else(|| ConfigError("`--config` needs a path".into()))?;
        if file.replace(path).is_some() {
            return Err(ConfigError("config file given twice".into()));
        }
    }
    let table = merged_table(kind, file.as_deref(), &overrides)?;
    RunConfig::from_table(kind, table)
}

/// Runs a loaded config and writes its outputs.
///
/// The report is written (to its path, else standard output) whenever the
/// experiment ran, converged or not. `timing` is the only key that varies
/// between identical runs.
pub fn execute(cfg: &RunConfig) -> Result<Status, ConfigError> {
    let started = Instant::now();
    let outcome = run::run(cfg)?;
    let elapsed = started.elapsed().as_secs_f64();
    let io = |what: &str, path: &std::path::Path, e: &dyn std::fmt::Display| {
        ConfigError(format!("cannot write {what} {}: {e}", path.display()))
    };

    let mut trajectory_written = false;
    if let (Some(path), Some(t)) = (&cfg.outputs.trajectory, &outcome.trajectory) {
        output::write_trajectory(path, &t.mesh, t.model.as_ref(), &t.part, cfg.outputs.oversample)
            .map_err(|e| io("trajectory", path, &e))?;
        trajectory_written = true;
        if let Some(gp) = &cfg.outputs.gnuplot {
            output::write_gnuplot(gp, path, t.mesh.dim()).map_err(|e| io("gnuplot script", gp, &e))?;
        }
    }

    let config_echo = serde_json::to_value(&cfg.echo).expect("TOML values map onto JSON");
    let report = json!({
        "kind": cfg.kind.name(),
        "config": config_echo,
        "method": { "k": cfg.method.k, "s": cfg.method.s, "n": cfg.method.n },
        "converged": outcome.converged(),
        "error": outcome.failure,
        "newton": outcome.newton.as_ref().map(newton_json),
        "result": outcome.summary,
        "drift": outcome.trajectory.as_ref().map(|t| t.drift()),
        "best_iterate": !outcome.converged() && outcome.trajectory.is_some(),
        "trajectory_written": trajectory_written,
        "timing": { "wall_seconds": elapsed },
    });
    match &cfg.outputs.report {
        Some(path) => output::write_report(path, &report).map_err(|e| io("report", path, &e))?,
        None => println!("{}", serde_json::to_string_pretty(&report).expect("serializable")),
    }
    Ok(if outcome.converged() { Status::Converged } else { Status::NewtonFailure })
}
