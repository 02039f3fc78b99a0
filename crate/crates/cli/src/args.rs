use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use effector_core::Algorithm;

#[derive(Debug, Parser)]
#[command(
    name = "effector",
    version,
    about = "Effector detection under the independent cascade model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select effectors for an activation state.
    Detect(DetectArgs),
    /// Estimate f1 and f2 of an effector set by simulation.
    Eval(EvalArgs),
    /// Run a configured experiment and write one CSV row per detector run.
    Experiment(ExperimentArgs),
    /// Dump k-th influence distances between two node lists.
    Distances(DistancesArgs),
    /// Evaluate detectors on one state over a grid of lambda values.
    Sweep(SweepArgs),
    /// Write a random directed graph or a synthetic social graph.
    GenGraph(GenGraphArgs),
    /// Write an activation state generated on a graph.
    GenState(GenStateArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Edge list: `src dst [prob]` per line.
    #[arg(long)]
    pub graph: PathBuf,
    /// Add both directions for every edge line.
    #[arg(long)]
    pub undirected: bool,
    /// Probability model: `uniform:P`, `wc` or `explicit`. Defaults to
    /// `explicit` when the file has a probability column, `wc` otherwise.
    #[arg(long)]
    pub prob: Option<String>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Active node identifiers, one per line.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, value_parser = parse_algorithm)]
    pub algo: Algorithm,
    #[arg(long)]
    pub budget: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Seed for the Random detector and, with `--shuffle-order`, the DAG
    /// extraction order.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use a seeded node order for MLBED's DAG extraction.
    #[arg(long)]
    pub shuffle_order: bool,
    /// Write MLBED's extracted DAG edges here.
    #[arg(long)]
    pub dag_out: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub state: PathBuf,
    /// Effector identifiers, one per line.
    #[arg(long)]
    pub effectors: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DistancesArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long)]
    pub sources: PathBuf,
    #[arg(long)]
    pub targets: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long)]
    pub budget: usize,
    /// Comma-separated detectors.
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm, default_value = "mbed")]
    pub algo: Vec<Algorithm>,
    /// Comma-separated lambda values; 0.05 to 0.95 in steps of 0.05 when
    /// omitted.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GraphKind {
    /// Each ordered pair is an edge with probability `--density`.
    Random,
    /// Community-structured undirected graph, one line per pair; load it
    /// with `--undirected`.
    Social,
}

#[derive(Debug, Args)]
pub struct GenGraphArgs {
    #[arg(long, value_enum)]
    pub kind: GraphKind,
    #[arg(long, default_value_t = 100)]
    pub nodes: usize,
    #[arg(long, default_value_t = 0.05)]
    pub density: f64,
    /// Undirected edge count of the social graph.
    #[arg(long, default_value_t = 300)]
    pub edges: usize,
    #[arg(long, default_value_t = 4)]
    pub communities: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StateKind {
    /// Uniform seeds followed by one diffusion run.
    Seeded,
    /// A uniform random set of active nodes.
    Random,
}

#[derive(Debug, Args)]
pub struct GenStateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_enum)]
    pub protocol: StateKind,
    /// Seed count for the seeded protocol.
    #[arg(long, default_value_t = 1)]
    pub budget: usize,
    /// Active count for the random protocol.
    #[arg(long, default_value_t = 1)]
    pub n1: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the seeds of the seeded protocol here.
    #[arg(long)]
    pub seeds_out: Option<PathBuf>,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: effector_core::Error| e.to_string())
}
