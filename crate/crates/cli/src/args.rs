use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use plsr_core::Variant;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "plsr",
    version,
    about = "Manifold PLSR: fit, predict, cross-validate, benchmark"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "name")]
pub enum Command {
    /// Fit a model on matrix CSVs or an epoch directory.
    Fit(FitArgs),
    /// Predict scores and classes for new rows.
    Predict(PredictArgs),
    /// k-fold cross-validated accuracy on an epoch directory.
    Crossval(CrossvalArgs),
    /// Preconditioned vs identity metric over several seeds.
    BenchPrecond(BenchArgs),
    /// Write a synthetic epoch directory.
    Synth(SynthArgs),
    /// Re-run the command recorded in a run manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    Bigr,
    BigrNoprecond,
    Simpls,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Bigr => Variant::BigrPreconditioned,
            VariantArg::BigrNoprecond => Variant::BigrIdentity,
            VariantArg::Simpls => Variant::Simpls,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    /// Number of latent components R.
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long, value_enum, default_value_t = VariantArg::Bigr)]
    pub variant: VariantArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Gradient tolerance, relative to max(1, |initial cost|).
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PreprocessArgs {
    /// Band-pass the epochs before flattening, e.g. `--bandpass 7 35`.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub bandpass: Option<Vec<f64>>,
    /// Decimate the epochs to this rate (Hz); must divide the sampling rate.
    #[arg(long, value_name = "HZ")]
    pub decimate: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["x", "epochs"]))]
pub struct FitArgs {
    /// Independent variables, one row per sample.
    #[arg(long, requires = "y")]
    pub x: Option<PathBuf>,
    /// Dependent variables (one-hot rows for classification).
    #[arg(long, requires = "x")]
    pub y: Option<PathBuf>,
    /// Epoch directory; labels become one-hot targets.
    #[arg(long, conflicts_with_all = ["x", "y"])]
    pub epochs: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    /// Record wall-clock seconds in the trace (output is then not reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Model JSON; the trace, report and run manifest are written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    /// One integer label per row; enables the accuracy metric.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Predictions CSV: one row per input row, scores then the argmax class.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub epochs: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    /// Metrics JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["epochs", "synthetic"]))]
pub struct BenchArgs {
    #[arg(long)]
    pub epochs: Option<PathBuf>,
    /// Generate a fresh synthetic dataset per seed.
    #[arg(long)]
    pub synthetic: bool,
    /// Comma-separated seeds, e.g. `--seeds 1,2,3`.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Signal-to-noise power ratio of the synthetic task.
    #[arg(long, default_value_t = 0.01)]
    pub snr: f64,
    #[arg(long, default_value_t = 120)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    /// Results JSON; the text table is written beside it and to stdout.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 120)]
    pub trials: usize,
    #[arg(long, default_value_t = 8)]
    pub channels: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    /// Signal-to-noise power ratio; `inf` for noise-free trials.
    #[arg(long, default_value_t = 1.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 200.0)]
    pub fs: f64,
    /// Output epoch directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// A `*.run.json` manifest written by an earlier command.
    pub manifest: PathBuf,
}
