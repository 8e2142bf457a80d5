//! `foldreg`: command-line front end.

mod commands;
mod output;
mod pipeline;

use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "foldreg", version, about = "Regularized fold-fold singularities: slow divergence integrals and canard cycles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tangencies, sliding/sewing regions and fold-fold type.
    Analyze(commands::AnalyzeArgs),
    /// Builds and certifies a zero-planting transition function φ_k.
    BuildPhi(commands::BuildPhiArgs),
    /// Checks the slow-fast assumptions and the Hopf conditions at the origin.
    CheckAssumptions(commands::CheckArgs),
    /// Tabulates a slow divergence integral profile.
    Sdi(commands::SdiArgs),
    /// Zeros of a slow divergence integral profile.
    Zeros(commands::ZerosArgs),
    /// Limit cycles of the regularized system at one epsilon.
    Cycles(commands::CyclesArgs),
    /// Fixed-point counts over an alpha sweep and saddle-node detection.
    Sweep(commands::SweepArgs),
    /// Runs an experiment manifest end to end.
    Pipeline(pipeline::PipelineArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let r = match &cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::BuildPhi(a) => commands::build_phi(a),
        Command::CheckAssumptions(a) => commands::check(a),
        Command::Sdi(a) => commands::sdi(a),
        Command::Zeros(a) => commands::zeros(a),
        Command::Cycles(a) => commands::cycles(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Pipeline(a) => pipeline::run(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
