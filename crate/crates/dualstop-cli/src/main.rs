use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dualstop_cli::config::{resolve, ConfigFile, Overrides};
use dualstop_cli::error::Result;
use dualstop_cli::{cmd_minimize, cmd_profile, cmd_value, cmd_verify};

/// Dual martingale upper bounds for discrete-time optimal stopping.
#[derive(Debug, Parser)]
#[command(name = "dualstop", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the optimal stopping value of the configured model.
    Value(RunArgs),
    /// Fit the martingale family by linear programming and re-price on an
    /// independent test sample; writes table.csv.
    Minimize(RunArgs),
    /// Tabulate objective mean and deviation over the family's standard
    /// parameter grid; writes profile.csv (and crossing.csv for the
    /// Bermudan model).
    Profile(RunArgs),
    /// Cross-check the optimality predicates against brute-force
    /// enumeration on binomial trees; writes sweep.json.
    Verify(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Named parameter set: pa1, pa2, or stylized.
    #[arg(long)]
    preset: Option<String>,

    /// RNG seed (required here or in the configuration file).
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(command: Command) -> Result<()> {
    let args = match &command {
        Command::Value(a) | Command::Minimize(a) | Command::Profile(a) | Command::Verify(a) => a,
    };
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let overrides = Overrides {
        preset: args.preset.clone(),
        seed: args.seed,
        out: args.out.clone(),
    };
    let config = resolve(file, &overrides)?;
    match command {
        Command::Value(_) => cmd_value(&config).map(|_| ()),
        Command::Minimize(_) => cmd_minimize(&config).map(|_| ()),
        Command::Profile(_) => cmd_profile(&config).map(|_| ()),
        Command::Verify(_) => cmd_verify(&config).map(|_| ()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
