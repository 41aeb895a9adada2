use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hbvm_cli::config::Kind;
use hbvm_cli::{execute, load_config, Status};

/// Periodic orbits and optimal transfers with energy-conserving HBVM(k,s) methods.
#[derive(Parser)]
#[command(name = "hbvm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    ///
    /// Arguments after the kind: an optional TOML config path, then any
    /// number of `--key value` overrides (`--H` is short for `--energy`).
    /// Exit status: 0 converged, 1 configuration or IO error, 2 Newton failure.
    Run {
        kind: Kind,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "CONFIG] [--KEY VALUE")]
        args: Vec<String>,
    },
}

fn main() -> ExitCode {
    let Command::Run { kind, args } = Cli::parse().command;
    let status = load_config(kind, &args).and_then(|cfg| execute(&cfg)).unwrap_or_else(|e| {
        eprintln!("hbvm: {e}");
        Status::ConfigError
    });
    if status == Status::NewtonFailure {
        eprintln!("hbvm: Newton iteration failed; diagnostics are in the report");
    }
    ExitCode::from(status as u8)
}
