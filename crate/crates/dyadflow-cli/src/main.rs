//! Command line front end: dataset synthesis, feature extraction, model
//! training and evaluation, feature-set ablation, and importance reports.

mod commands;
mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dyadflow_core::dataset::Task;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "dyadflow", version, about = "Dyadic EEG flow-state detection pipeline")]
struct Cli {
    /// Worker threads for data-parallel stages (0 picks the core count).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a recording tree and write the labeled feature matrix as CSV.
    Extract(ExtractArgs),
    /// Cross-validate one or more classifiers on extracted features.
    TrainEval(TrainEvalArgs),
    /// Score the standard regional feature-set ladder on shared folds.
    Ablate(AblateArgs),
    /// Rank features by model importance (coefficients, impurity, or SHAP).
    Importance(ImportanceArgs),
    /// Generate a synthetic dyad dataset with planted, known structure.
    Synth(SynthArgs),
}

/// Where a command reads its dataset from: raw recordings or a feature CSV
/// written by `extract`. Exactly one must be given.
#[derive(Args)]
struct InputArgs {
    /// Data root holding manifest.csv and the per-round recording folders.
    #[arg(long, value_name = "DIR")]
    data_root: Option<PathBuf>,
    /// Feature matrix CSV produced by `dyadflow extract`.
    #[arg(long, value_name = "FILE")]
    features: Option<PathBuf>,
    /// File listing the 14 channel names in recording-row order.
    #[arg(long, value_name = "FILE", requires = "data_root")]
    channel_map: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Label task to evaluate.
    #[arg(long, value_enum, default_value_t = TaskArg::Binary)]
    task: TaskArg,
    /// Fold count for cross-validation.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Root seed; folds, balancing, and model initialization derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grouped folds: all rows of a pair stay in one fold.
    #[arg(long, conflicts_with = "stratify")]
    group_folds: bool,
    /// Stratified folds: class ratios preserved per fold.
    #[arg(long)]
    stratify: bool,
    /// Write the full JSON report to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write a flat CSV of the results to this file.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ExtractArgs {
    /// Data root holding manifest.csv and the per-round recording folders.
    #[arg(long, value_name = "DIR")]
    data_root: PathBuf,
    /// File listing the 14 channel names in recording-row order.
    #[arg(long, value_name = "FILE")]
    channel_map: Option<PathBuf>,
    /// Destination CSV for the feature matrix.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct TrainEvalArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    eval: EvalArgs,
    /// Comma-separated classifiers (lr, svm, dt, rf, nn, dnn1, dnn2, dnn3)
    /// or "all".
    #[arg(long, value_name = "LIST", default_value = "rf")]
    models: String,
    /// Regional feature subset to train on, e.g. "L+F" or "L+F+FS+LS".
    #[arg(long, value_name = "SET")]
    feature_set: Option<String>,
    /// Balance and z-score on the full dataset before the fold split. This
    /// leaks test statistics into training and is kept only to mirror a
    /// protocol that did so; default preprocessing is per fold.
    #[arg(long)]
    paper_mode: bool,
    /// Fit z-score statistics on the full dataset instead of per fold
    /// (implied by --paper-mode).
    #[arg(long)]
    normalize_global: bool,
    /// Also evaluate with the synchrony block removed and report the paired
    /// accuracy difference.
    #[arg(long)]
    compare_synchrony: bool,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    eval: EvalArgs,
    /// Classifier to run the ladder with.
    #[arg(long, value_name = "MODEL", default_value = "rf")]
    model: String,
}

#[derive(Args)]
struct ImportanceArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    eval: EvalArgs,
    /// Classifier to explain.
    #[arg(long, value_name = "MODEL", default_value = "rf")]
    model: String,
    /// Attribution method: coef (linear models), mdi (trees and forests),
    /// or shap (any model).
    #[arg(long, value_name = "METHOD", default_value = "mdi")]
    method: String,
    /// How many top-ranked features to report.
    #[arg(long, default_value_t = 20)]
    top_k: usize,
    /// SHAP evaluation budget per explained row.
    #[arg(long, default_value_t = 256)]
    shap_coalitions: usize,
    /// Cap on the number of rows SHAP explains (0 explains every row).
    #[arg(long, default_value_t = 256)]
    shap_rows: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory to write the dataset into.
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 47)]
    pairs: usize,
    #[arg(long, default_value_t = 3)]
    rounds: usize,
    /// Segments sampled per round.
    #[arg(long, default_value_t = 5)]
    samplings: usize,
    /// Inter-brain mixing weight on both-high samples; expected band
    /// correlation is its square.
    #[arg(long, default_value_t = 0.8)]
    coupling: f64,
    /// Strength of the frontal band-power response to flow scores
    /// (0 plants no individual-feature signal).
    #[arg(long, default_value_t = 0.2)]
    band_effect_strength: f64,
    /// Log-amplitude wobble of each band component.
    #[arg(long, default_value_t = 0.35)]
    amplitude_jitter: f64,
    /// White noise amplitude added to every channel.
    #[arg(long, default_value_t = 0.1)]
    noise_floor: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TaskArg {
    Binary,
    Ternary,
}

impl TaskArg {
    fn task(self) -> Task {
        match self {
            TaskArg::Binary => Task::Binary,
            TaskArg::Ternary => Task::Ternary,
        }
    }

    fn name(self) -> &'static str {
        match self {
            TaskArg::Binary => "binary",
            TaskArg::Ternary => "ternary",
        }
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if !dyadflow_core::parallel::configure_threads(jobs) {
            eprintln!("warning: worker pool already running, --jobs ignored");
        }
    }
    match cli.command {
        Command::Extract(args) => commands::extract(args),
        Command::TrainEval(args) => commands::train_eval(args),
        Command::Ablate(args) => commands::ablate(args),
        Command::Importance(args) => commands::importance(args),
        Command::Synth(args) => commands::synth(args),
    }
}
