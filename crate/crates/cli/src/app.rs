//! Argument parsing and dispatch for the `torus-lasso` binary.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use torus_lasso::LambdaZeroMode;

use crate::commands::EXIT_ERROR;
use crate::{cmd_cover, cmd_lasso, cmd_simulate, CliError, Overrides, ScenarioFile};

#[derive(Debug, Parser)]
#[command(name = "torus-lasso", version, about = "Certified Euler tubes, lassos and torus covers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plain Euler trajectory as CSV (t, x1..xn).
    Simulate(Args),
    /// Certified tube from the scenario's x0 until the period balls nest.
    Lasso(Args),
    /// One lasso per source point, run in parallel.
    Cover(Args),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ZeroMode {
    Threshold,
    Paper,
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output file (simulate) or directory (lasso, cover).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "TORUS_LASSO_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    lambda_zero_mode: Option<ZeroMode>,
}

type CommandFn = fn(&ScenarioFile) -> Result<u8, CliError>;

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    let (args, cmd): (&Args, CommandFn) = match &cli.command {
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Lasso(a) => (a, cmd_lasso),
        Command::Cover(a) => (a, cmd_cover),
    };
    let mut scenario = ScenarioFile::load(&args.scenario)?;
    let overrides = Overrides {
        seed: args.seed,
        lambda_mode: args.lambda_zero_mode.map(|m| match m {
            ZeroMode::Threshold => LambdaZeroMode::Threshold,
            ZeroMode::Paper => LambdaZeroMode::Paper,
        }),
        workers: args.workers,
        out: args.out.clone(),
    };
    overrides.apply(&mut scenario)?;
    scenario.validate()?;
    cmd(&scenario)
}

/// Parse `args` (program name first), run the command and return the exit code.
/// Usage errors print clap's message and return its code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return u8::try_from(e.exit_code()).unwrap_or(EXIT_ERROR);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
