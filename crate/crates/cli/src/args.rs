use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gaze_dynamics::eval::ProtocolConfig;
use gaze_dynamics::{FeatureConfig, FeatureMode, GazeSource};

#[derive(Debug, Parser)]
#[command(name = "gazedyn", version, about = "Glance descriptors, gaze-behavior models and lane-change prediction")]
pub struct Cli {
    /// Log filter, e.g. `info` or `debug` (overrides RUST_LOG).
    #[arg(long, global = true)]
    pub log_level: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multi-driver corpus.
    Synth(SynthArgs),
    /// Extract training descriptors for every event of a corpus.
    Extract(ExtractArgs),
    /// Fit the three behavior models on a corpus.
    Fit(FitArgs),
    /// Classify the sweep windows of every lane change with a fitted model file.
    Predict(PredictArgs),
    /// Recall curves, confidence traces and gaze-quality metrics.
    Eval(EvalArgs),
    /// Leave-one-driver-out cross-validation with per-fold outputs.
    Cv(CvArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FeatureArgs {
    /// Descriptor: ga (gaze accumulation), gd (glance duration) or gdgf (duration plus frequency).
    #[arg(long, default_value = "ga")]
    pub mode: FeatureMode,
    /// Window length in seconds.
    #[arg(long, default_value_t = 5.0)]
    pub window: f64,
    /// Debounce window W in frames.
    #[arg(long, default_value_t = 6)]
    pub debounce_w: usize,
    /// Relative ridge added to covariances before solving.
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,
}

impl FeatureArgs {
    pub fn config(&self) -> FeatureConfig {
        FeatureConfig {
            mode: self.mode,
            window_seconds: self.window,
            debounce_w: self.debounce_w,
            ridge_epsilon: self.ridge,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub features: FeatureArgs,
    /// Test sweep half-width around SyncF, in seconds.
    #[arg(long, default_value_t = 5.0)]
    pub sweep_seconds: f64,
    /// Gaze stream for lane-change training windows.
    #[arg(long, default_value = "annotated")]
    pub lc_source: GazeSource,
    /// Gaze stream for lane-keeping training windows.
    #[arg(long, default_value = "estimated")]
    pub lk_source: GazeSource,
    /// Gaze stream for test windows.
    #[arg(long, default_value = "estimated")]
    pub test_source: GazeSource,
}

impl ProtocolArgs {
    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            features: self.features.config(),
            sweep_seconds: self.sweep_seconds,
            lane_change_training: self.lc_source,
            lane_keeping_training: self.lk_source,
            testing: self.test_source,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Number of drivers [default: 7]; per-driver event counts cycle
    /// through the reference table.
    #[arg(long)]
    pub drivers: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for the corpus.
    #[arg(long)]
    pub out: PathBuf,
    /// Noise channel: `default`, `identity`, or a channel file [default: the
    /// config file's channel, else `default`].
    #[arg(long)]
    pub noise: Option<String>,
    /// Generator config file. Explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Frame rate of generated streams [default: 30].
    #[arg(long)]
    pub fps: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Output directory; the models go to `models.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Model file written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Model file to test with. Required unless --cv is given.
    #[arg(long, conflicts_with = "cv", required_unless_present_any = ["cv", "gaze_quality"])]
    pub model: Option<PathBuf>,
    /// Leave-one-driver-out cross-validation instead of a fixed model.
    #[arg(long)]
    pub cv: bool,
    /// Also compare annotated and estimated streams (accumulation metrics, confusion matrix).
    #[arg(long)]
    pub gaze_quality: bool,
    /// Gaze-quality window and stride, in seconds.
    #[arg(long, default_value_t = 5.0)]
    pub quality_window: f64,
    #[arg(long, default_value_t = 1.0)]
    pub quality_stride: f64,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub out: PathBuf,
}
