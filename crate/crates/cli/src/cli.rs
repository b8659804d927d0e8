//! Command-line arguments.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "longgreeks", version, about = "Long-horizon price sensitivities by martingale extraction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON experiment configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Dotted-path override such as `mc.n_paths=50000`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Directory for the CSV and JSON outputs.
    #[arg(long, global = true, value_name = "PATH", default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Monte Carlo price on each horizon.
    Price,
    /// Sensitivity of ln p_T with its addend breakdown.
    Greeks,
    /// Slope series against the closed-form long-horizon limit.
    Convergence,
    /// CIR transition density on a grid.
    Density,
    /// Stabilizing solution of the algebraic Riccati equation.
    Riccati,
    /// Fast oracle checks.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Price => "price",
            Command::Greeks => "greeks",
            Command::Convergence => "convergence",
            Command::Density => "density",
            Command::Riccati => "riccati",
            Command::Selftest => "selftest",
        }
    }
}
