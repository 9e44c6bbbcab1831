use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

#[derive(Parser)]
#[command(name = "tide", version, about = "Long-horizon forecasting with a dense encoder-decoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a CSV dataset and write checkpoint, history and metrics.
    Train(TrainArgs),
    /// Rolling evaluation of a checkpoint on one segment.
    Evaluate(EvaluateArgs),
    /// Inference and training time across look-back lengths.
    Bench(BenchArgs),
    /// Linear dynamical system experiments.
    Lds(LdsArgs),
    /// Finite-difference check of every block and the full network.
    Gradcheck(GradcheckArgs),
}

/// Settings shared by commands that build a model from a run configuration.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Tuned hyperparameters of a benchmark (etth1, electricity, ...).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: ConfigArgs,
    /// Series-per-column CSV with a leading date column.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub segment: String,
    /// Keep only the first `n` series, as during training.
    #[arg(long)]
    pub series_limit: Option<usize>,
    /// Report errors in the original units instead of standardized ones.
    #[arg(long)]
    pub raw_units: bool,
    #[arg(long)]
    pub outdir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub run: ConfigArgs,
    /// Dataset to time on; a synthetic load dataset when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Series of the synthetic dataset.
    #[arg(long, default_value_t = 321)]
    pub series: usize,
    #[arg(long, value_delimiter = ',', default_value = "192,336,720,1440,2880")]
    pub lookbacks: Vec<usize>,
    /// Time points per batch; each contributes one window per series.
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("experiment").required(true).args(["verify_decay", "make_dataset", "fit_linear"])))]
pub struct LdsArgs {
    /// Truncation error of the autoregressive predictor against window length.
    #[arg(long)]
    pub verify_decay: bool,
    /// Write the supervised LDS dataset and report its window counts.
    #[arg(long)]
    pub make_dataset: bool,
    /// Train the look-back to horizon linear map and report its test error.
    #[arg(long)]
    pub fit_linear: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Model configuration file; a small network covering every block kind
    /// when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Bench(a) => commands::bench(a),
        Command::Lds(a) => commands::lds(a),
        Command::Gradcheck(a) => commands::gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
