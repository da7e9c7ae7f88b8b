use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rosseland::config::RunConfig;
use rosseland::runner::{run_experiment, run_solve, run_validate};

/// Finite-element solver for divergence-form nonlinear elliptic equations
/// with fixed-point iteration over the admissible set.
#[derive(Parser)]
#[command(name = "rosseland", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for run artifacts (overrides the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Suppress summary lines on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the fixed-point solve described by the config.
    Solve { config: PathBuf },
    /// Run ellipticity certification and boundary-range checks only.
    Validate { config: PathBuf },
    /// Run the experiment described by the config's [experiment] section.
    Experiment { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output_dir = cli.output_dir.as_deref();
    let result = match &cli.command {
        Command::Solve { config } => {
            RunConfig::load(config).and_then(|c| run_solve(&c, output_dir, cli.quiet))
        }
        Command::Validate { config } => {
            RunConfig::load(config).and_then(|c| run_validate(&c, cli.quiet))
        }
        Command::Experiment { config } => {
            RunConfig::load(config).and_then(|c| run_experiment(&c, output_dir, cli.quiet))
        }
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
