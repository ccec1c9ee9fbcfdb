//! Command line front end wiring datasets, models, training, and
//! evaluation into reproducible runs.
//!
//! Every command resolves its settings from an optional JSON config file
//! overlaid with flags, echoes the resolved config into the output
//! directory, and writes byte-deterministic outputs for a given seed.

pub mod commands;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config: exit code 1.
    Usage(String),
    /// Runtime or numerical failure: exit code 2.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub(crate) fn usage(err: impl std::fmt::Display) -> CliError {
        CliError::Usage(err.to_string())
    }

    pub(crate) fn runtime(err: impl std::fmt::Display) -> CliError {
        CliError::Runtime(err.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "molmask",
    about = "Learn molecular structure rules by recovering masked atoms",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic molecule dataset as a MOLG file.
    Generate(GenerateArgs),
    /// Fit a count model (unigram or octet-unigram) on the train split.
    Fit(FitArgs),
    /// Train a neural model and write its best-validation checkpoint.
    Train(TrainArgs),
    /// Evaluate a saved model on dataset maskings.
    Eval(EvalArgs),
    /// Evaluate across several corruption sizes and write a sweep CSV.
    Sweep(SweepArgs),
    /// Write confusion matrices, overall and per covalent-bond count.
    Confusion(ConfusionArgs),
    /// Print per-masked-atom element distributions for one molecule.
    Predict(PredictArgs),
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for results and the resolved-config echo.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Global seed override.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of molecules.
    #[arg(long)]
    pub count: Option<usize>,
    /// Complexity mode: octet or extended.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub min_heavy: Option<usize>,
    #[arg(long)]
    pub max_heavy: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Count model kind: unigram or octet-unigram.
    #[arg(long)]
    pub model: Option<String>,
    /// MOLG dataset path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Smoothing constant for octet-unigram.
    #[arg(long)]
    pub k: Option<f64>,
    /// Grid-search k on the validation split.
    #[arg(long)]
    pub tune_k: bool,
    #[arg(long)]
    pub n_corrupt: Option<usize>,
    #[arg(long)]
    pub variants: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Neural model kind: bag-of-atoms, bag-of-neighbors,
    /// binary-transformer, or bond-transformer.
    #[arg(long)]
    pub model: Option<String>,
    /// MOLG dataset path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub n_corrupt: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Saved model file (checkpoint or count-model JSON).
    #[arg(long)]
    pub model_path: Option<PathBuf>,
    /// MOLG dataset path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Which split to evaluate: train, val, test, or all.
    #[arg(long)]
    pub subset: Option<String>,
    #[arg(long)]
    pub n_corrupt: Option<usize>,
    #[arg(long)]
    pub variants: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub model_path: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub subset: Option<String>,
    /// Comma-separated corruption sizes; "all" masks every atom.
    #[arg(long)]
    pub n_corrupt_list: Option<String>,
    /// Maskings per molecule per size (0 = default oversampling rule).
    #[arg(long)]
    pub variants: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ConfusionArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub model_path: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub subset: Option<String>,
    #[arg(long)]
    pub n_corrupt: Option<usize>,
    #[arg(long)]
    pub variants: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub model_path: Option<PathBuf>,
    /// Kekulized SMILES input.
    #[arg(long)]
    pub smiles: Option<String>,
    /// MOLG file input (first molecule).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated atom indices to mask.
    #[arg(long)]
    pub mask: Option<String>,
}

/// Runs a parsed command to completion.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Fit(args) => commands::fit(args),
        Command::Train(args) => commands::train(args),
        Command::Eval(args) => commands::eval(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Confusion(args) => commands::confusion(args),
        Command::Predict(args) => commands::predict(args),
    }
}

/// Worker-thread cap for evaluation: MOLMASK_THREADS, defaulting to the
/// available parallelism.
pub fn thread_count() -> usize {
    std::env::var("MOLMASK_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}
