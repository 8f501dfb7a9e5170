use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ovq", version, about = "Queues with resampled arrival and service rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact stationary distribution (QBD, two-point or embedded-chain route)
    Solve(SolveArgs),
    /// Exact tail P(Q >= n) against the exponential heavy-traffic tail
    Compare(CompareArgs),
    /// Discrete-event simulation of the queue
    Simulate(SimulateArgs),
    /// Variances and covariance of the arrival and potential-service flows
    Moments(MomentsArgs),
    /// Heavy-traffic limit parameters
    Ht(HtArgs),
    /// Large-deviation variance constants
    Ld(LdArgs),
    /// Numerical PGF inversion and geometric-time transform grids
    Invert(InvertArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Table1,
    Figure1,
    AppendixDemo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    /// Use the model's rates as given
    AsGiven,
    /// Scale arrivals to load 1 first
    Critical,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Model-spec JSON file
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    pub model: Option<PathBuf>,
    /// Built-in model set
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Output file; standard output when absent
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Output format; CSV output to a file also writes a JSON sidecar
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest queue length reported
    #[arg(long, default_value_t = 200)]
    pub n_max: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest level of the tail curves
    #[arg(long, default_value_t = 400)]
    pub n_max: usize,
    /// Loads to rescale the arrival rates to, comma separated; defaults to
    /// the model's own load
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub rho: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Master seed; replication k uses stream k
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Events per replication (departures for the endogenous model)
    #[arg(long, default_value_t = 1_000_000)]
    pub events: u64,
    /// Independent replications; two or more give replication confidence intervals
    #[arg(long, default_value_t = 1)]
    pub replications: usize,
    /// Leading fraction of each replication discarded
    #[arg(long, default_value_t = 0.1)]
    pub warmup: f64,
    /// Scaled times for (1-rho) Q(t/(1-rho)^2) trajectories, comma separated
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub trajectory_grid: Vec<f64>,
    /// Largest queue length in the histogram output
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Times t, comma separated
    #[arg(long, value_delimiter = ',', value_name = "LIST", default_value = "0.5,1,2,5,10,20,50")]
    pub t_grid: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct HtArgs {
    #[command(flatten)]
    pub common: Common,
    /// How arrival rates enter the limit formulas
    #[arg(long, value_enum, default_value = "as-given")]
    pub scaling: ScalingArg,
    /// Levels in the CSV tail curve
    #[arg(long, default_value_t = 400)]
    pub n_max: usize,
}

#[derive(Debug, Args)]
pub struct LdArgs {
    #[command(flatten)]
    pub common: Common,
    /// Weights alpha in alpha A + (1 - alpha) S, comma separated
    #[arg(long, value_delimiter = ',', value_name = "LIST", default_value = "0,0.5,1")]
    pub alpha: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest queue length of the inverted distribution
    #[arg(long, default_value_t = 200)]
    pub n_max: usize,
    /// Geometric-time parameters r in (0, 1]; emits (r, z, K) instead of a distribution
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub r: Vec<f64>,
    /// Points of the z grid on [0, 1] for the transform output
    #[arg(long, default_value_t = 21)]
    pub z_points: usize,
    /// Initial law: empty, stationary, point:N or geometric:P
    #[arg(long, default_value = "empty")]
    pub initial: String,
}
