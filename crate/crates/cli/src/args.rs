use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Mode-based ensemble fusion: split planning, end-to-end runs with the
/// built-in committee, fusion of external predictions, and metric audits.
#[derive(Debug, Parser)]
#[command(name = "modefuse", version, about)]
pub struct Cli {
    /// Seed for split planning, augmentation and training.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Output directory for reports, plans and predictions.
    #[arg(
        long,
        global = true,
        env = "MODEFUSE_OUT",
        default_value = "modefuse-out"
    )]
    pub out: PathBuf,

    /// Suppress progress messages and the printed table.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the built-in committee per split iteration, fuse, and report.
    Run(RunArgs),
    /// Fuse externally produced prediction files and report.
    Fuse(FuseArgs),
    /// Recompute the metric suite for prediction files against the manifest.
    Metrics(MetricsArgs),
    /// Write a stratified split plan for external trainers.
    Split(SplitArgs),
    /// Write a synthetic two-class image dataset with a manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Existing split plan; when absent one is generated from the seed.
    #[arg(long)]
    pub plan: Option<PathBuf>,

    /// Split iterations for a generated plan.
    #[arg(long, default_value_t = 5)]
    pub iterations: usize,

    /// Training fraction for a generated plan.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset manifest (`image_id,path,label`).
    #[arg(long)]
    pub manifest: PathBuf,

    #[command(flatten)]
    pub plan: PlanArgs,

    /// Preset (`augmented`, `plain`) or comma-separated members such as
    /// `logistic:32,centroid:16`.
    #[arg(long, default_value = "augmented")]
    pub committee: String,

    /// File with one member per line; overrides `--committee`.
    #[arg(long)]
    pub committee_file: Option<PathBuf>,

    /// Augment training images (reflection, translation, scaling).
    #[arg(long)]
    pub augment: bool,

    /// Side images are resized to before augmentation and features.
    #[arg(long, default_value_t = modefuse::preprocess::DEFAULT_INPUT_SIDE)]
    pub input_side: u32,

    #[arg(long)]
    pub epochs: Option<usize>,

    #[arg(long)]
    pub learning_rate: Option<f64>,

    #[arg(long)]
    pub mini_batch: Option<usize>,

    /// Label treated as the positive class.
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub positive: i32,

    /// Disable data-parallel execution.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    /// Prediction files (CSV, TSV, or JSON lines). Repeatable.
    #[arg(long = "predictions", short = 'p', required = true, num_args = 1..)]
    pub predictions: Vec<PathBuf>,

    #[command(flatten)]
    pub plan: PlanArgs,

    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub positive: i32,

    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Manifest supplying the true labels.
    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long = "predictions", short = 'p', required = true, num_args = 1..)]
    pub predictions: Vec<PathBuf>,

    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub positive: i32,

    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long, default_value_t = 5)]
    pub iterations: usize,

    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Images labelled -1.
    #[arg(long, default_value_t = 100)]
    pub negatives: usize,

    /// Images labelled +1.
    #[arg(long, default_value_t = 100)]
    pub positives: usize,

    #[arg(long, default_value_t = 224)]
    pub side: u32,
}
