//! `conjugate`: reproduce the coin posteriors, run the verification suite, and check
//! sufficient statistics.
//!
//! Exit codes: 0 success, 1 a check failed, 2 bad input or usage, 3 a numerical failure
//! (zero validity, zero-mass observation, non-convergent quadrature).

mod coin;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use conjugate_core::suite::Family;

use crate::output::CliError;

/// Environment variable naming a TOML file with quadrature settings.
pub const QUAD_CONFIG_ENV: &str = "CONJUGATE_QUAD_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "conjugate", version, about = "Verifiable conjugate priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Posteriors of a coin's bias from a uniform prior after a string of H/T tosses.
    Coin {
        /// Tosses, H for heads (1) and T for tails (0); may be empty.
        #[arg(long, default_value = "")]
        obs: String,
        /// Number of grid points in each CSV.
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..))]
        grid: u32,
        /// Output directory for prior.csv, after_first.csv and final.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the conjugacy checks and property suite.
    Verify {
        #[arg(long, default_value = "all", value_parser = parse_family)]
        family: Family,
        /// Replace every per-check tolerance by this value.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, hide = true)]
        inject_bad_translator: bool,
    },
    /// Check a sufficient statistic on a batch of observations.
    Suffstat {
        #[arg(long, value_enum)]
        family: StatFamily,
        /// Comma-separated observations: 0/1 for beta-flip, reals for normal.
        #[arg(long)]
        batch: String,
        /// Prior parameters `a,b`: (alpha, beta) or (mu, sigma).
        #[arg(long)]
        prior: Option<String>,
        /// Observation noise for the normal family.
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatFamily {
    BetaFlip,
    Normal,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
        .map_err(|_| format!("expected one of {}", Family::NAMES.join(", ")))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Coin { obs, grid, out } => coin::run(&obs, grid as usize, &out),
        Command::Verify {
            family,
            tol,
            seed,
            report,
            inject_bad_translator,
        } => verify::run_verify(family, tol, seed, report.as_deref(), inject_bad_translator),
        Command::Suffstat {
            family,
            batch,
            prior,
            nu,
            tol,
            report,
        } => verify::run_suffstat(family, &batch, prior.as_deref(), nu, tol, report.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
