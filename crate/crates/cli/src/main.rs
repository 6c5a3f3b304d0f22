//! Command-line frontend for the traversal-time library: energy sweeps,
//! definition comparisons, single-point reports, and the numeric
//! verification run.
//!
//! Data goes to output files (CSV or JSON); stdout carries only summaries.
//! Exit codes: 0 success, 1 verification found a failing identity, 2
//! invalid input, 3 the computation itself failed (the failing energies are
//! listed on stderr).

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod format;
mod report;
mod sweep;
mod verify;

#[derive(Parser)]
#[command(
    name = "tunneltime",
    version,
    about = "Traversal and tunneling times for 1D piecewise-constant potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep traversal times over an energy grid
    Sweep(sweep::SweepArgs),
    /// Compare the three time definitions on a sub-barrier grid
    Compare(sweep::CompareArgs),
    /// Re-derive the closed forms numerically and score every identity
    Verify(verify::VerifyArgs),
    /// Describe one scattering configuration in plain words
    Report(report::ReportArgs),
}

/// Marks failures of the computation itself, as opposed to invalid input;
/// they exit 3 instead of 2.
#[derive(Debug)]
pub struct NumericFailure(pub String);

impl std::fmt::Display for NumericFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericFailure {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(args) => sweep::run_sweep(args),
        Command::Compare(args) => sweep::run_compare(args),
        Command::Verify(args) => verify::run(args),
        Command::Report(args) => report::run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<NumericFailure>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
