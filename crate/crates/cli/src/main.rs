//! `tsst`: train, sample, evaluate and ablate time-series style transfer
//! models from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tsst", version, about = "Diffusion-based time-series style transfer")]
pub struct Cli {
    /// Root directory that relative output paths are resolved against.
    #[arg(long, env = "TSST_OUTPUT_ROOT", default_value = ".", global = true)]
    pub root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a run configuration with preset defaults.
    InitConfig {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Preset::Desk)]
        preset: Preset,
    },
    /// Generate a synthetic dataset file.
    Synth(SynthArgs),
    /// Convert a CSV file to the dataset format.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Layout::Wide)]
        layout: Layout,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train (or resume training) a model.
    Train(TrainArgs),
    /// Style transfer for aligned content/style records.
    Generate(GenerateArgs),
    /// Score generated series against their content and style references.
    Evaluate(EvaluateArgs),
    /// Run an ablation harness.
    Ablate(AblateArgs),
    /// Run a comparison method on aligned content/style records.
    Baseline(BaselineArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Layout {
    Wide,
    Rows,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Take the synthetic section of this run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write held-out content/style pairs (two files: `<out>.content.tsv`,
    /// `<out>.style.tsv`) instead of a training corpus.
    #[arg(long)]
    pub pairs: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Defaults to the run's stored configuration, then the desk preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run directory; defaults to the configured output directory.
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Total iteration target; resuming continues up to it.
    #[arg(long = "iters")]
    pub iterations: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args, Clone)]
pub struct SamplingArgs {
    /// Content guidance scale.
    #[arg(long = "sc")]
    pub content_scale: Option<f64>,
    /// Style guidance scale.
    #[arg(long = "ss")]
    pub style_scale: Option<f64>,
    /// Temperature on the injected noise.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Number of reverse diffusion steps (defaults to the training value).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub content: PathBuf,
    #[arg(long)]
    pub style: PathBuf,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Outputs per pair.
    #[arg(long, default_value_t = 1)]
    pub num: usize,
    /// Ignore both conditions.
    #[arg(long)]
    pub unconditional: bool,
    /// Output directory (`generated.tsv`, `generated.svg`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub generated: PathBuf,
    #[arg(long)]
    pub content: PathBuf,
    #[arg(long)]
    pub style: PathBuf,
    #[arg(long, default_value = "stat26")]
    pub embedding: String,
    /// Write per-pair scores here (tab-separated).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AblationKind {
    Guidance,
    Temperature,
    Length,
    Encoder,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(value_enum)]
    pub kind: AblationKind,
    /// Trained run directory (the `encoder` kind only reads its config).
    #[arg(long)]
    pub run: Option<PathBuf>,
    /// Configuration for the `encoder` kind when no run is given.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    /// Repeats per temperature.
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    /// Training iterations per encoder variant.
    #[arg(long = "iters")]
    pub iterations: Option<u64>,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaselineKind {
    Stitch,
    Haar,
    Nst,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub method: BaselineKind,
    #[arg(long)]
    pub content: PathBuf,
    #[arg(long)]
    pub style: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Stitching kernel width.
    #[arg(long, default_value_t = 15)]
    pub kernel: usize,
    /// Haar decomposition depth.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub step: f64,
    #[arg(long = "iters", default_value_t = 200)]
    pub iterations: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
