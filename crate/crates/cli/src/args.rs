use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cra_core::geofence::Scene;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "cra",
    version,
    about = "Confidential reconstruction accuracy: analysis, optimization, simulation and geofencing",
    after_help = "Worker threads default to the available parallelism; set CRA_WORKERS to override (1 = sequential)."
)]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Directory for result files and the run manifest.
    #[arg(long, global = true, default_value = "cra-out")]
    pub out_dir: PathBuf,

    /// Format of the primary result file.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Every metric at one operating point.
    Analyze(AnalyzeArgs),
    /// Metrics over a grid of transmission probabilities.
    Sweep(SweepArgs),
    /// Optimal transmission probability.
    Optimize(OptimizeArgs),
    /// Seeded cross-check battery; exits 1 on any failed check.
    Validate(ValidateArgs),
    /// Eve-success, optimal-CRA and optimal-p_alpha maps plus the threshold contour.
    Geofence(GeofenceArgs),
    /// Writes the built-in demo scene.
    DemoScene,
    /// Re-runs a manifest and checks that every output digest matches.
    #[serde(skip)]
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Sweep(_) => "sweep",
            Command::Optimize(_) => "optimize",
            Command::Validate(_) => "validate",
            Command::Geofence(_) => "geofence",
            Command::DemoScene => "demo-scene",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Source flip probability 0 → 1.
    #[arg(long)]
    pub p: f64,
    /// Source flip probability 1 → 0.
    #[arg(long)]
    pub q: f64,
    /// Bob's per-slot success probability.
    #[arg(long)]
    pub ps: f64,
    /// Eve's per-slot success probability.
    #[arg(long)]
    pub pse: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Transmission probability.
    #[arg(long)]
    pub palpha: f64,
    /// Weights of the marginal baseline, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5])]
    pub omega: Vec<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.01)]
    pub from: f64,
    #[arg(long, default_value_t = 1.0)]
    pub to: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Weight of the `a_omega` column.
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    /// Fill `cra_numeric` from the 8-state linear solve.
    #[arg(long)]
    pub numeric: bool,
    /// Fill the simulation columns.
    #[arg(long)]
    pub sim: bool,
    #[arg(long, default_value_t = cra_core::sim::DEFAULT_HORIZON)]
    pub horizon: u64,
    #[arg(long, default_value_t = cra_core::sim::DEFAULT_RUNS)]
    pub runs: u64,
    #[arg(long, default_value_t = cra_core::sim::DEFAULT_WARMUP)]
    pub warmup: u64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Lower end of the feasible interval.
    #[arg(long, default_value_t = cra_core::optimizer::DEFAULT_LOWER)]
    pub pmin: f64,
    /// Upper end of the feasible interval.
    #[arg(long, default_value_t = 1.0)]
    pub pmax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultArg {
    CoefficientSign,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ValidateArgs {
    /// Random general-branch tuples.
    #[arg(long, default_value_t = 200)]
    pub tuples: usize,
    /// Symmetric tuples per correlation class.
    #[arg(long, default_value_t = 20)]
    pub symmetric_tuples: usize,
    /// Truncation of the age series.
    #[arg(long, default_value_t = cra_core::stationary::DEFAULT_SERIES_TERMS)]
    pub series_terms: usize,
    /// Skip the simulation agreement check.
    #[arg(long)]
    pub no_sim: bool,
    #[arg(long, hide = true, value_enum)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GeofenceArgs {
    /// Scene JSON file.
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub p: f64,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    /// Contour level of the optimal-CRA map.
    #[arg(long, default_value_t = 0.3)]
    pub threshold: f64,
    #[arg(long, default_value_t = cra_core::optimizer::DEFAULT_LOWER)]
    pub pmin: f64,
    #[arg(long, default_value_t = 1.0)]
    pub pmax: f64,
    /// The scene as read; recorded so a manifest replays without the file.
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_content: Option<Scene>,
}

#[derive(Args, Debug, Clone)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}
