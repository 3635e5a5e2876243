mod error;
mod generate;
mod optimize;
mod sweep;
mod validate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::CliError;

/// Statistical MNT channel ensembles and binary RIS optimizers.
#[derive(Debug, Parser)]
#[command(name = "mntris", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw scattering-matrix realizations and write them as MNTS files.
    Generate(generate::GenerateArgs),
    /// Run one optimizer on one realization and print a JSON report.
    Optimize(optimize::OptimizeArgs),
    /// Run a Monte-Carlo sweep and write results, summary and manifest.
    Sweep(sweep::SweepArgs),
    /// Run the built-in numerical self-checks.
    Validate(validate::ValidateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Optimize(args) => optimize::run(args),
        Command::Sweep(args) => sweep::run(args),
        Command::Validate(args) => validate::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code.value())
        }
    }
}
