//! Command-line experiment runner for cache-enabled small-cell networks.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cachenet::Error;

/// Exit status for a run whose solver stopped before closing the bound gap.
pub const EXIT_NOT_CONVERGED: u8 = 1;
/// Exit status for malformed arguments or unreadable inputs.
pub const EXIT_USAGE: u8 = 2;
/// Exit status when no association satisfies every SINR requirement.
pub const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "cachenet",
    version,
    about = "Caching, association and power control experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance and write summary, association, power and trace CSVs.
    Solve(SolveArgs),
    /// Sweep the energy-delay weight and write one row per weight and replication.
    SweepAlpha(SweepArgs),
    /// Compare caching policies over a cache capacity grid.
    CompareCaching(CachingArgs),
    /// Compare association algorithms while varying users or cache capacity.
    CompareAlgorithms(AlgorithmArgs),
    /// Generate an instance file from a preset or configuration.
    Generate(GenerateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// Instance file; when absent an instance is generated from --seed.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Generator configuration file overriding the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for instance generation and random policies.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Generate at full network scale instead of the small default preset.
    #[arg(long)]
    pub paper_scale: bool,
}

#[derive(Args, Debug, Clone)]
pub struct Output {
    /// Directory that receives the CSV files; created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct Solver {
    /// Gap tolerance; defaults to 1e-6 relative to the first upper bound.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Iteration budget for the decomposition.
    #[arg(long, default_value_t = cachenet::benders::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// Monte Carlo draws of exponential backhaul delay; 0 disables sampling.
    #[arg(long, default_value_t = 0)]
    pub sample_backhaul: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Ucwt,
    Doa,
    Ema,
    Oracle,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    Lpf,
    Gpc,
    Rc,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Users,
    Capacity,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub output: Output,
    #[command(flatten)]
    pub solver: Solver,
    #[arg(long, value_enum, default_value_t = Algorithm::Ucwt)]
    pub algorithm: Algorithm,
    /// Energy weight in [0, 1]; defaults to the instance value.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = Policy::Lpf)]
    pub caching: Policy,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub output: Output,
    #[command(flatten)]
    pub solver: Solver,
    #[arg(long, value_enum, default_value_t = Algorithm::Ucwt)]
    pub algorithm: Algorithm,
    /// Comma-separated weights in [0, 1].
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"
    )]
    pub alpha: Vec<f64>,
    /// Generated instances per weight, seeded from --seed upward.
    #[arg(long, default_value_t = 1)]
    pub replications: u64,
}

#[derive(Args, Debug)]
pub struct CachingArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub output: Output,
    #[command(flatten)]
    pub solver: Solver,
    /// Cache capacity per SBS as fractions of the catalog size.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.25,0.5,1")]
    pub capacity: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Generated instances per grid point.
    #[arg(long, default_value_t = 10)]
    pub instances: u64,
}

#[derive(Args, Debug)]
pub struct AlgorithmArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub output: Output,
    #[command(flatten)]
    pub solver: Solver,
    #[arg(long, value_enum, default_value_t = SweepVariable::Users)]
    pub sweep: SweepVariable,
    /// Sweep values: user counts, or capacities as fractions of the catalog.
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Energy weight of the decomposition run.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub instances: u64,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub source: Source,
    /// Instance file to write.
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoFeasibleAssociation | Error::Unreachable { .. } => EXIT_INFEASIBLE,
            Error::NoIncumbent { .. } | Error::Lp(_) => EXIT_NOT_CONVERGED,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::usage(format!("csv: {e}"))
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("io: {e}"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::SweepAlpha(a) => commands::sweep_alpha(&a),
        Command::CompareCaching(a) => commands::compare_caching(&a),
        Command::CompareAlgorithms(a) => commands::compare_algorithms(&a),
        Command::Generate(a) => commands::generate(&a),
    };
    match outcome {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
