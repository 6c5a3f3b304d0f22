//! The `verify` subcommand: run the numeric oracle over its grid and score
//! every identity.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use tunneltime::oracle::{verify_identities, VerificationGrid};

use crate::NumericFailure;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Override every identity tolerance (relative and absolute alike)
    #[arg(long)]
    tol: Option<f64>,
    /// Where to write the JSON report
    #[arg(long, default_value = "verify_report.json")]
    out: PathBuf,
}

pub fn run(args: VerifyArgs) -> Result<u8> {
    let mut grid = VerificationGrid::default();
    if let Some(tol) = args.tol {
        if !(tol.is_finite() && tol > 0.0) {
            bail!("--tol must be finite and > 0, got {tol}");
        }
        grid.relative_tolerance = tol;
        grid.absolute_tolerance = tol;
    }
    let report = verify_identities(&grid)
        .map_err(|err| NumericFailure(format!("verification run failed: {err}")))?;
    for check in &report.checks {
        println!(
            "{} {:<32} max deviation {:.3e} (tolerance {:.1e}, {} points)",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.max_deviation,
            check.tolerance,
            check.points
        );
        if !check.passed {
            if let Some(worst) = &check.worst {
                println!("     worst at {worst}");
            }
        }
    }
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(&args.out, json + "\n")
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "{}: report written to {}",
        if report.passed { "all identities hold" } else { "identity failures found" },
        args.out.display()
    );
    Ok(if report.passed { 0 } else { 1 })
}
