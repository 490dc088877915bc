use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(name = "lintransfer", version, about = "Transfer learning for linear regression by fine-tuning")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit an OLS model to a dataset CSV and write model.json.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test, per input row, whether the fine-tuned model should be used.
    Transfer(TransferArgs),
    /// Reproduce an experiment end to end.
    Experiment(ExperimentArgs),
    /// Monte-Carlo map of the average gain over sample sizes.
    Phases {
        /// PhaseConfig JSON; defaults to the desk-scale preset.
        #[arg(long, conflicts_with = "paper_scale")]
        config: Option<PathBuf>,
        /// Full-resolution grid.
        #[arg(long)]
        paper_scale: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write synthetic data files.
    Generate {
        #[arg(value_enum)]
        kind: GenerateKind,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct TransferArgs {
    #[arg(long)]
    source_model: PathBuf,
    #[arg(long)]
    target_model: PathBuf,
    /// Rows to decide on: header x1..xD (a trailing y column is ignored).
    #[arg(long)]
    inputs: PathBuf,
    /// Source training data, needed when k or rho is tuned.
    #[arg(long)]
    source_data: Option<PathBuf>,
    /// Target training data, needed when k or rho is tuned.
    #[arg(long)]
    target_data: Option<PathBuf>,
    #[arg(long, default_value_t = lintransfer::tuning::DEFAULT_ALPHA_DIVISOR)]
    alpha_div: f64,
    /// Fixed iteration count; tuned when absent.
    #[arg(long, conflicts_with = "tune_k")]
    k: Option<u64>,
    /// Tune k (the default when --k is absent).
    #[arg(long)]
    tune_k: bool,
    /// Fixed prior radius; tuned when absent.
    #[arg(long, conflicts_with = "tune_rho")]
    rho: Option<f64>,
    /// Tune rho (the default when --rho is absent).
    #[arg(long)]
    tune_rho: bool,
    #[arg(long, default_value_t = lintransfer::transfer_test::DEFAULT_LEVEL)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Poly,
    GefcomA,
    GefcomB,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    preset: Preset,
    /// Load CSV holding the target zone (gefcom presets).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Load CSV holding the source zone; defaults to --data.
    #[arg(long)]
    source_data: Option<PathBuf>,
    #[arg(long, default_value = "load")]
    target_column: String,
    #[arg(long, default_value = "load")]
    source_column: String,
    /// Temperature station (1-based); the station mean when absent.
    #[arg(long)]
    station: Option<usize>,
    #[arg(long, default_value_t = 8)]
    hour: u32,
    /// Temperature cuts `c1,c2`; terciles of the training temperatures when absent.
    #[arg(long, value_delimiter = ',')]
    cuts: Option<Vec<f64>>,
    #[arg(long, default_value_t = lintransfer::tuning::DEFAULT_ALPHA_DIVISOR)]
    alpha_div: f64,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = lintransfer::transfer_test::DEFAULT_LEVEL)]
    level: f64,
    /// Held-out sample size of the poly preset.
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenerateKind {
    /// Polynomial source/target datasets.
    Poly,
    /// Two simulated load zones sharing one weather path.
    Load,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = cli.seed;
    let result = match cli.command {
        Command::Fit { data, out } => commands::fit(&data, &out, seed),
        Command::Transfer(args) => commands::transfer(&args, seed),
        Command::Experiment(args) => commands::experiment(&args, seed),
        Command::Phases {
            config,
            paper_scale,
            out,
        } => commands::phases(config.as_deref(), paper_scale, &out, seed),
        Command::Generate { kind, out } => commands::generate(kind, &out, seed),
    };
    match result {
        Ok(commands::Status::Clean) => ExitCode::SUCCESS,
        Ok(commands::Status::Flagged(n)) => {
            eprintln!("warning: {n} row(s) or cell(s) flagged");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
