//! `kagome`: exact diagonalisation, VQE sweeps, observables and circuit
//! compilation for Heisenberg patches of the kagome lattice.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Params;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Task(String),
}

impl From<kagome_vqe::Error> for CliError {
    fn from(e: kagome_vqe::Error) -> Self {
        CliError::Task(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Task(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "kagome",
    version,
    about = "VQE studies of the kagome Heisenberg antiferromagnet"
)]
struct Cli {
    /// TOML or JSON file with parameters; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenpairs by Lanczos.
    Ed(Params),
    /// Optimise one ansatz with restarts.
    Vqe(Params),
    /// Grid of patches, schemes and layer counts.
    Sweep(Params),
    /// Gradient statistics at random parameters.
    Gradstudy(Params),
    /// Correlations, dimer correlators and structure factor.
    Observables(Params),
    /// Singlet-triplet gap, exactly or by VQE.
    SpinGap(Params),
    /// Schedule one ansatz round on hardware.
    Compile(Params),
    /// Render SVG figures from a CSV written by another command.
    Plot(Params),
}

impl Command {
    fn split(self) -> (&'static str, Params) {
        match self {
            Command::Ed(p) => ("ed", p),
            Command::Vqe(p) => ("vqe", p),
            Command::Sweep(p) => ("sweep", p),
            Command::Gradstudy(p) => ("gradstudy", p),
            Command::Observables(p) => ("observables", p),
            Command::SpinGap(p) => ("spin-gap", p),
            Command::Compile(p) => ("compile", p),
            Command::Plot(p) => ("plot", p),
        }
    }
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let (file_experiment, file_params) = match &cli.config {
        Some(path) => config::load_file(path)?,
        None => (None, Params::default()),
    };
    let (experiment, flags) = match cli.command {
        Some(c) => {
            let (name, p) = c.split();
            (name.to_string(), p)
        }
        None => match file_experiment {
            Some(e) => (e, Params::default()),
            None => {
                return Err(CliError::Config(
                    "no subcommand given and the config names no experiment".into(),
                ))
            }
        },
    };
    let params = config::merge(&file_params, &flags);
    commands::run(&experiment, params)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(outcome) if outcome.all_ok() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("kagome: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
