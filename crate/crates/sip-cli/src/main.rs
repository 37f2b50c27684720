//! `sip`: boundary-driven symmetric inclusion process toolkit.
//!
//! Subcommands compute the stationary state three ways (closed forms, exact
//! truncated-box solves, kinetic Monte Carlo) and cross-check them. Reports
//! go to stdout or `--out` as CSV (with `#` metadata lines) or JSON; the
//! `SIP_OUT_DIR` environment variable prefixes relative output paths.
//! Identical configuration and seed reproduce identical bytes.

use anyhow::Result;
use clap::{Parser, Subcommand};
use sip_cli::config::{self, CommonArgs};
use sip_cli::{commands, report};

#[derive(Parser)]
#[command(name = "sip", version, about = "Boundary-driven symmetric inclusion process toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form stationary density profile (exact and weak-drive)
    Profile(CommonArgs),
    /// Equilibrium marginals, potential, and moments at the base rates
    Equilibrium(CommonArgs),
    /// First-order correction coefficients with verification
    Mclennan(CommonArgs),
    /// Dyson expansion orders and finite-difference convergence
    Dyson(CommonArgs),
    /// Exact stationary solve on the truncated box
    Solve(CommonArgs),
    /// Kinetic Monte Carlo estimates with batch-means errors
    Simulate(CommonArgs),
    /// Consolidated invariant battery; exits nonzero on any failure
    Verify {
        #[command(flatten)]
        args: CommonArgs,
        /// Corrupt the correction coefficients first (negative control)
        #[arg(long, hide = true)]
        corrupt_coefficients: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(all_passed) => {
            if !all_passed {
                std::process::exit(1);
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let (args, run): (&CommonArgs, Box<dyn FnOnce(&config::RunConfig) -> Result<report::Report>>) =
        match &cli.command {
            Command::Profile(args) => (args, Box::new(commands::profile::run)),
            Command::Equilibrium(args) => (args, Box::new(commands::equilibrium::run)),
            Command::Mclennan(args) => (args, Box::new(commands::mclennan::run)),
            Command::Dyson(args) => (args, Box::new(commands::dyson::run)),
            Command::Solve(args) => (args, Box::new(commands::solve::run)),
            Command::Simulate(args) => (args, Box::new(commands::simulate::run)),
            Command::Verify {
                args,
                corrupt_coefficients,
            } => {
                let corrupt = *corrupt_coefficients;
                (
                    args,
                    Box::new(move |cfg: &config::RunConfig| commands::verify::run(cfg, corrupt)),
                )
            }
        };
    let cfg = config::resolve(args)?;
    let report = run(&cfg)?;
    for check in &report.checks {
        eprintln!(
            "{} {}: {:.3e} (threshold {:.3e}) - {}",
            if check.passed { "[PASS]" } else { "[FAIL]" },
            check.name,
            check.value,
            check.threshold,
            check.detail
        );
    }
    report.emit(&cfg)?;
    Ok(report.all_passed())
}
