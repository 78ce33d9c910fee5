//! `netsnr`: structured network regression for point patterns on street
//! networks.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "netsnr", version, about = "Point-pattern intensities and structured network regression on geo-referenced graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degree distribution, components, diameter, betweenness and communities.
    Stats(StatsArgs),
    /// Edgewise and nodewise intensity tables.
    Intensity(IntensityArgs),
    /// Per-covariate min, quartiles, mean and max.
    Summarize(SummarizeArgs),
    /// Fit one model and write coefficient, criteria and smooth-curve tables.
    Fit(FitArgs),
    /// Fit several models on the same data and tabulate AIC, BIC and GCV.
    Compare(CompareArgs),
    /// Simulate a Poisson point pattern on the network.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum LengthArg {
    Euclidean,
    Squared,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AssignArg {
    Snap,
    PaperBox,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AggregationArg {
    Mean,
    Tail,
    Head,
}

#[derive(Args)]
pub struct GraphArgs {
    /// Node table `id,x,y`.
    #[arg(long, requires = "edges", conflicts_with = "geojson")]
    pub nodes: Option<PathBuf>,
    /// Edge table `id,tail,head,directed`.
    #[arg(long, requires = "nodes")]
    pub edges: Option<PathBuf>,
    /// GeoJSON with Point nodes and LineString edges.
    #[arg(long)]
    pub geojson: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub length: LengthArg,
}

#[derive(Args)]
pub struct PatternArgs {
    /// Event table `x,y[,mark]`.
    #[arg(long)]
    pub events: PathBuf,
    /// Snapping tolerance; 1% of the bounding-box diagonal by default.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "snap")]
    pub assign: AssignArg,
}

#[derive(Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Number of Girvan–Newman communities, or `auto` for maximum modularity.
    #[arg(long, default_value = "auto")]
    pub communities: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct IntensityArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SummarizeArgs {
    /// Covariate table `node_id,...`.
    #[arg(long)]
    pub covariates: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct DataArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub pattern: PatternArgs,
    #[arg(long)]
    pub covariates: PathBuf,
    /// Region adjacency `region_a,region_b`, overriding the model's `mrf` file.
    #[arg(long)]
    pub lattice: Option<PathBuf>,
}

#[derive(Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model configuration file.
    #[arg(long)]
    pub model: PathBuf,
    /// Accepted for symmetry with `simulate`; fitting is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model configuration files, one per candidate.
    #[arg(long, required = true, num_args = 1..)]
    pub model: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Constant intensity such as `2.5`, or `exp(1 + 0.5*z)` over node covariates.
    #[arg(long)]
    pub intensity: String,
    /// Node covariates referenced by the intensity expression.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
    /// How node intensities become edge intensities.
    #[arg(long, value_enum, default_value = "mean")]
    pub aggregation: AggregationArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Replicate index under the seed.
    #[arg(long, default_value_t = 0)]
    pub replicate: u64,
    /// Output event file.
    #[arg(long)]
    pub out: PathBuf,
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("SNR_THREADS") else { return Ok(()) };
    let n: usize = raw.trim().parse().map_err(|_| anyhow::anyhow!("SNR_THREADS must be a positive integer, found '{raw}'"))?;
    anyhow::ensure!(n > 0, "SNR_THREADS must be a positive integer, found '{raw}'");
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Stats(a) => commands::stats(&a),
        Command::Intensity(a) => commands::intensity(&a),
        Command::Summarize(a) => commands::summarize(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Simulate(a) => commands::simulate(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
