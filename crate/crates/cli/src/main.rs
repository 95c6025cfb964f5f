//! `dqd`: command-line front end for the double-dot refrigerator model.
//!
//! Exit codes: 0 ok, 2 config error, 3 model or solver error, 4 I/O error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "dqd",
    version,
    about = "Five-state double-quantum-dot refrigerator model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file (stdout when omitted); overrides `[output] path`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    /// Omit the timestamp so identical configs give identical bytes.
    #[arg(long, global = true)]
    reproducible: bool,

    /// Charge-neutrality threshold (default 1e-10 * gamma).
    #[arg(long, global = true, value_name = "X", allow_negative_numbers = true)]
    tol_q: Option<f64>,

    /// Cooling threshold on q_r (default 1e-12 * gamma * eps).
    #[arg(long, global = true, value_name = "X", allow_negative_numbers = true)]
    tol_cool: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Steady state, currents and entropy production of `[device]`.
    Steady,
    /// Currents and entropy production of `[device]`.
    Currents,
    /// CSV over `[grid]` or `[random]`.
    Sweep,
    /// Intersection of the cooling and no-charging sets.
    Manifold,
    /// Third-law audit of `[audit]`.
    Audit,
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("--jobs: {e}")))?;
    }
    let path = cli
        .config
        .ok_or_else(|| CliError::config("--config PATH is required"))?;
    let config = config::load(&path)?;
    let ctx = Context {
        tolerances: config.tolerances(cli.tol_q, cli.tol_cool),
        config,
        out: cli.out,
        reproducible: cli.reproducible,
    };
    match cli.command {
        Command::Steady => commands::single(&ctx, true),
        Command::Currents => commands::single(&ctx, false),
        Command::Sweep => commands::sweep_csv(&ctx),
        Command::Manifold => commands::manifold(&ctx),
        Command::Audit => commands::audit(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dqd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
