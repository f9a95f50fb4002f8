//! `gramplace` command-line tool.
//!
//! Exit codes: 0 on success, 2 for usage and input errors, 3 for numerical
//! failures (including a failed modularity check).

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gramplace::numerics::DEFAULT_STABILITY_MARGIN;
use gramplace::placement::DEFAULT_ENUMERATION_CAP;

#[derive(Debug, Parser)]
#[command(
    name = "gramplace",
    version,
    about = "Actuator placement by controllability Gramian metrics"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Metric to rank by; min-eig, log-det and avg-energy are accepted by
    /// `bruteforce` only.
    #[arg(long, global = true, value_enum)]
    pub metric: Option<MetricArg>,
    /// JSON array of rows: C̄ for `weighted`, the output matrix C for `h2`.
    #[arg(long, global = true, value_name = "PATH")]
    pub weight_file: Option<PathBuf>,
    /// Weight built from the grid structure.
    #[arg(long, global = true, value_enum)]
    pub weight: Option<WeightArg>,
    /// Emit a flat CSV table instead of the JSON report.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Eigenvalues must satisfy Re λ < -margin.
    #[arg(long, global = true, default_value_t = DEFAULT_STABILITY_MARGIN)]
    pub margin: f64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Trace,
    Weighted,
    H2,
    MinEig,
    LogDet,
    AvgEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    /// Every bus frequency state.
    Frequencies,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every candidate and list them best first.
    Rank { problem: PathBuf },
    /// Choose the best k candidates.
    Select {
        problem: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Per-state controllability centrality.
    Centrality { problem: PathBuf },
    /// Check the modular identity on random subset pairs.
    Verify {
        problem: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exhaustive search over all k-subsets.
    Bruteforce {
        problem: PathBuf,
        #[arg(long)]
        k: usize,
        /// Refuse when C(M, k) exceeds this.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
    /// Minimum-energy input for the chosen candidates, checked by simulation.
    Synthesize {
        problem: PathBuf,
        /// Candidate ids forming the input matrix.
        #[arg(long, value_delimiter = ',', required = true)]
        ids: Vec<String>,
        /// Horizon.
        #[arg(long = "t", visible_alias = "horizon")]
        t: f64,
        /// Target state, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        xf: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Write a generated problem file.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Ring of swing-equation buses with all bus-pair HVDC candidates.
    Ring {
        #[arg(long)]
        buses: usize,
        /// Extra random lines across the ring.
        #[arg(long, default_value_t = 0)]
        chords: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        inertia: f64,
        #[arg(long, default_value_t = 0.5)]
        damping: f64,
        #[arg(long, default_value_t = 1.0)]
        susceptance: f64,
        #[arg(long, default_value_t = 0.1)]
        grounding: f64,
    },
    /// Random sparse Hurwitz system with unit-norm candidate columns.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
