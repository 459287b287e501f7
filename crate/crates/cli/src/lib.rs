//! Command-line layer over `fdf-core`: CSV ingestion, the `fit`,
//! `simulate` and `report` commands, and their CSV, JSON and SVG outputs.

pub mod args;
pub mod commands;
pub mod error;
pub mod fixtures;
pub mod input;
pub mod report;
pub mod svg;
pub mod tables;

pub use args::Cli;
pub use error::{CliError, CliResult};
pub use report::FitReport;

/// Dispatch a parsed command line.
pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        args::Command::Fit(a) => {
            let r = commands::cmd_fit(a)?;
            println!("mode={:?} K_hat={} r_hat={} -> {}", r.mode, r.k_hat, r.r_hat, a.out.display());
        }
        args::Command::Simulate(a) => {
            let res = commands::cmd_simulate(a)?;
            println!(
                "model {} N={} reps={} failed={} -> {}",
                res.config.model_id,
                res.config.n,
                res.config.reps,
                res.n_failed(),
                a.out.display()
            );
        }
        args::Command::Report(a) => {
            let stats = commands::cmd_report(a)?;
            println!("{} summaries -> {}", stats.len(), a.out.display());
        }
    }
    Ok(())
}
