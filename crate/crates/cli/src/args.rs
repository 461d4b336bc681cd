use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ldp_qif::Protocol;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "ldpqif", version, about = "Leakage, refinement and attack simulation for LDP protocols")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    /// Use exact rational arithmetic where supported.
    #[arg(long, global = true)]
    pub exact: bool,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub lanes: Option<usize>,

    /// Also write a line chart of the results as SVG.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bayes capacity of each protocol over an epsilon grid.
    Capacity(CapacityArgs),
    /// Local-hashing ASR: corrected formula, earlier formula and simulation.
    AsrLhCompare(AsrLhArgs),
    /// Decide whether the left channel is refined by the right one.
    Refine(RefineArgs),
    /// Run ASR or MSE experiments described by a JSON config.
    Simulate(SimulateArgs),
    /// Breakpoints of 2x2 trade-off functions.
    TradeoffExport(TradeoffArgs),
    /// Check that a mechanism family is a refinement family on a grid.
    FamilyCheck(FamilyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CapacityArgs {
    /// JSON sweep config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long, value_delimiter = ',')]
    pub protocols: Option<Vec<Protocol>>,

    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,

    /// Threshold values for THE.
    #[arg(long, value_delimiter = ',')]
    pub thetas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args)]
pub struct AsrLhArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 5, 6, 8, 10, 15, 20, 30, 50])]
    pub k_grid: Vec<usize>,

    #[arg(long, value_delimiter = ',', default_values_t = [3.0, 5.0])]
    pub epsilons: Vec<f64>,

    /// Hash range; the variance-optimal value for each epsilon when omitted.
    #[arg(long)]
    pub g: Option<usize>,

    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    #[arg(long, default_value_t = 1000)]
    pub users: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum RefineMode {
    /// Trade-off test for 2x2 channels, LP otherwise.
    #[default]
    Auto,
    Tradeoff,
    Lp,
}

#[derive(Debug, Clone, Args)]
pub struct RefineArgs {
    /// Channel file (.csv or .json), mechanism spec JSON, or `PROTO:key=value,...`.
    pub left: String,

    /// Same forms as LEFT.
    pub right: String,

    #[arg(long, value_enum, default_value_t = RefineMode::Auto)]
    pub mode: RefineMode,

    /// Use the 2x2 bitwise core of SUE, OUE and THE specs.
    #[arg(long)]
    pub bitwise: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// JSON experiment config.
    pub config: PathBuf,

    /// Overrides the config's trial count.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TradeoffArgs {
    #[arg(long, value_delimiter = ',', default_values = ["SUE", "OUE", "THE"])]
    pub protocols: Vec<Protocol>,

    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 3.0, 5.0])]
    pub epsilons: Vec<f64>,

    #[arg(long, default_value_t = 0.95)]
    pub theta: f64,

    /// Extra 2x2 channel files to include.
    #[arg(long)]
    pub channel: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Grr,
    Sue,
    Oue,
    The,
    OnehotSue,
    OnehotOue,
    OnehotThe,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: FamilyKind,

    /// Domain size for GRR and one-hot families.
    #[arg(long, default_value_t = 3)]
    pub k: usize,

    #[arg(long)]
    pub theta: Option<f64>,

    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0])]
    pub epsilons: Vec<f64>,

    /// Check the reversed direction instead.
    #[arg(long)]
    pub anti: bool,
}
