use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seqest_core::plan::{DEFAULT_GROWTH_RATIO, DEFAULT_OPEN_TAU, DEFAULT_RHO};
use seqest_core::Mode;

#[derive(Debug, Parser)]
#[command(
    name = "seqest",
    version,
    about = "Design and evaluate multistage estimation plans"
)]
pub struct Cli {
    /// Worker threads for sweeps and simulations (default: all cores).
    #[arg(long, global = true, env = "SEQEST_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a sampling schedule and print it.
    Design(DesignArgs),
    /// Exact coverage and average sample number over a parameter grid.
    Evaluate(EvaluateArgs),
    /// Monte Carlo coverage and average sample number.
    Simulate(SimulateArgs),
    /// Search for the largest zeta that keeps coverage on a verification grid.
    Tune(TuneArgs),
    /// Run one estimation on recorded or synthetic observations.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct GoalArgs {
    /// Estimation scheme.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    /// Margin for single-criterion modes (absolute or relative by mode).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Absolute margin.
    #[arg(long)]
    pub eps_a: Option<f64>,
    /// Relative margin.
    #[arg(long)]
    pub eps_r: Option<f64>,
    /// Allowed miss probability.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Risk-allocation factor (default: the scheme's sufficient value).
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Ladder spacing of fixed schedules.
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    /// Open-ended ladders: stages with full budget before halving.
    #[arg(long, default_value_t = DEFAULT_OPEN_TAU)]
    pub tau: u32,
    /// Open-ended ladders: first sample size.
    #[arg(long)]
    pub n1: Option<u64>,
    /// Open-ended ladders: growth ratio (> 1).
    #[arg(long, default_value_t = DEFAULT_GROWTH_RATIO)]
    pub ratio: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PlanSource {
    /// Plan file written by `design`; goal flags are ignored when given.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    #[command(flatten)]
    pub goal: GoalArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub goal: GoalArgs,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub source: PlanSource,
    /// Parameter grid: start:stop:step, log:start:stop:count or a comma list.
    #[arg(long)]
    pub grid: String,
    /// Open-ended plans: stages evaluated before the residual is bounded.
    #[arg(long, default_value_t = seqest_core::stopping::DEFAULT_STAGE_CAP)]
    pub stage_cap: usize,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: PlanSource,
    /// Parameter values (same syntax as `evaluate --grid`).
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value_t = seqest_core::sim::DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub goal: GoalArgs,
    /// Fixed verification grid; by default lattice grids for absolute
    /// binomial goals and uniform-plus-lattice grids otherwise.
    #[arg(long)]
    pub grid: Option<String>,
    /// Relative bisection width.
    #[arg(long, default_value_t = seqest_core::tuner::DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Also write the search transcript as JSON.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: PlanSource,
    /// Observation file, one integer per line.
    #[arg(long, conflicts_with_all = ["theta", "seed"])]
    pub data: Option<PathBuf>,
    /// Synthetic stream parameter.
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = seqest_core::stopping::DEFAULT_DRAW_CAP)]
    pub draw_cap: u64,
    #[arg(long, default_value_t = seqest_core::stopping::DEFAULT_STAGE_CAP)]
    pub stage_cap: usize,
    #[command(flatten)]
    pub out: Output,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse::<Mode>().map_err(|_| {
        let names: Vec<&str> = Mode::ALL.iter().map(|m| m.name()).collect();
        format!("unknown mode {s:?}; expected one of {}", names.join(", "))
    })
}
