//! Experiment driver for the `fraccgls` solvers: configuration handling,
//! the `run`, `compare`, `convergence` and `stability` subcommands, and the
//! CSV/JSON artifacts they write.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::{Parser, Subcommand};
use fraccgls::analysis::Solver;

pub use commands::{
    cmd_compare, cmd_convergence, cmd_run, cmd_stability, CompareOptions, ConvergenceOptions,
    StabilityOptions,
};
pub use config::{Method, Overrides, RunConfig};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "fraccgls",
    version,
    about = "Riesz-fractional CGLS experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve and write field profiles for every recorded time level
    Run,
    /// Pointwise and norm discrepancies between the two solvers
    Compare {
        /// Comma-separated fractional orders (default: the config's alpha)
        #[arg(long, value_delimiter = ',')]
        alphas: Vec<f64>,
        /// Comma-separated comparison times
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0])]
        times: Vec<f64>,
        /// Compare one solver against itself (all errors should be zero)
        #[arg(long = "self-check", value_parser = parse_solver)]
        self_check: Option<Solver>,
    },
    /// Observed spatial and temporal orders
    Convergence {
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Plane-wave mode of the spatial study
        #[arg(long, default_value_t = 2)]
        mode: i64,
    },
    /// Frozen-coefficient amplification sweep of the implicit scheme
    Stability {
        #[arg(long = "omega-count", default_value_t = 1024)]
        omega_count: usize,
        #[arg(long = "v-frozen", allow_negative_numbers = true)]
        v_frozen: Option<f64>,
        #[arg(long = "psi-max")]
        psi_max: Option<f64>,
    },
}

fn parse_solver(s: &str) -> Result<Solver, String> {
    match s {
        "ifdm" => Ok(Solver::Ifdm),
        "tsfs" => Ok(Solver::Tsfs),
        other => Err(format!("unknown solver '{other}' (expected ifdm or tsfs)")),
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let config = cli.overrides.resolve()?;
    match &cli.command {
        Command::Run => {
            let s = cmd_run(&config)?;
            println!(
                "wrote {} files to {}",
                s.files.len(),
                config.output_dir.display()
            );
        }
        Command::Compare {
            alphas,
            times,
            self_check,
        } => {
            let s = cmd_compare(
                &config,
                &CompareOptions {
                    alphas: alphas.clone(),
                    times: times.clone(),
                    self_check: *self_check,
                },
            )?;
            for r in &s.norms {
                println!(
                    "alpha={} t={} {:<4} l2={:.4e} linf={:.4e}",
                    r.alpha,
                    r.t,
                    r.quantity.label(),
                    r.l2,
                    r.linf
                );
            }
        }
        Command::Convergence { levels, mode } => {
            let s = cmd_convergence(
                &config,
                &ConvergenceOptions {
                    levels: *levels,
                    mode: *mode,
                },
            )?;
            for st in &s.studies {
                println!("{}: order {:.4}", st.name, st.order);
            }
        }
        Command::Stability {
            omega_count,
            v_frozen,
            psi_max,
        } => {
            let s = cmd_stability(
                &config,
                &StabilityOptions {
                    omega_count: *omega_count,
                    v_frozen: *v_frozen,
                    psi_max: *psi_max,
                },
            )?;
            println!(
                "max |xi| = {:.16e} at omega = {:.6} ({} flagged)",
                s.max_modulus, s.omega_at_max, s.flagged
            );
        }
    }
    Ok(())
}
