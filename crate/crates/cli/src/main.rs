mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::commands::Context;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Structural checks on a quadruple or assembled model.
    Validate,
    /// Delayed closed-loop energy trace as CSV.
    Simulate,
    /// Simulation plus exponential fit.
    Decay,
    /// Closed-form and boundary-value transfer functions on a lambda grid.
    Transfer,
    /// Ingham ratio batches and modal infimum.
    Observability,
    /// Rational-point stability criterion.
    Criterion,
    /// Change-of-variables residual and transfer agreement.
    Conjugacy,
}

/// Numerical laboratory for coupled wave systems with delayed point damping.
#[derive(Debug, Parser)]
#[command(name = "cwl", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration for the command.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CWL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CWL_THREADS = {raw:?} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
    let ctx = Context { config: cli.config.clone(), out: cli.out.clone() };
    match cli.command {
        Command::Validate => commands::validate(&ctx),
        Command::Simulate => commands::simulate_cmd(&ctx),
        Command::Decay => commands::decay(&ctx),
        Command::Transfer => commands::transfer(&ctx),
        Command::Observability => commands::observability(&ctx),
        Command::Criterion => commands::criterion(&ctx),
        Command::Conjugacy => commands::conjugacy(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cwl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
