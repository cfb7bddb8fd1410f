//! `qrpca`: decompose color video, score results, composite new clips and
//! time the low-rank update.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bad invocation; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "qrpca",
    version,
    about = "Quaternion robust PCA for color video"
)]
pub struct Cli {
    /// Worker threads, 0 for one per core
    #[arg(long, global = true, env = "QRPCA_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a frame sequence into background, foreground and noise
    Decompose(DecomposeArgs),
    /// Score backgrounds or foreground masks against ground truth
    Evaluate(EvaluateArgs),
    /// Paste masked foreground onto a new background
    Synthesize(SynthesizeArgs),
    /// Time the full and manifold low-rank updates
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Directory of input frames (png/jpg, sorted by name)
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `key = value` config file, or a manifest.json to replay
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Resize frames to WIDTHxHEIGHT before decomposing
    #[arg(long)]
    pub resize: Option<String>,
    /// Keep the raw rank-one background instead of the row-mode background
    #[arg(long)]
    pub no_crib: bool,
    #[command(flatten)]
    pub solver: SolverFlags,
}

/// Solver overrides; unset flags fall back to the config file, then to the
/// built-in defaults.
#[derive(Debug, Args, Default)]
pub struct SolverFlags {
    /// Background rank [default: 1]
    #[arg(long)]
    pub rank: Option<usize>,
    /// ADMM iterations [default: 20]
    #[arg(long)]
    pub iters: Option<usize>,
    /// Initial penalty [default: 1]
    #[arg(long)]
    pub mu0: Option<f64>,
    /// Penalty growth per iteration [default: 1.5]
    #[arg(long)]
    pub rho: Option<f64>,
    /// Noise weight [default: 2/sqrt(height*width)]
    #[arg(long)]
    pub rho1: Option<f64>,
    /// Total-variation weight [default: 0.035*sqrt(height*width)]
    #[arg(long)]
    pub rho2: Option<f64>,
    /// Singular value weight scale [default: 1]
    #[arg(long)]
    pub c1: Option<f64>,
    /// Sparse weight scale [default: 0.1]
    #[arg(long)]
    pub c2: Option<f64>,
    /// Offset inside the sparse weight logarithm [default: 0.0001]
    #[arg(long)]
    pub eps: Option<f64>,
    /// Sparse block height [default: 16]
    #[arg(long)]
    pub block_h: Option<usize>,
    /// Sparse block width [default: 16]
    #[arg(long)]
    pub block_w: Option<usize>,
    /// Foreground mask threshold on the target [default: 0.11]
    #[arg(long)]
    pub fg_threshold: Option<f64>,
    /// Iteration cap of the TV denoiser [default: 50]
    #[arg(long)]
    pub tv_iters: Option<usize>,
    /// Duality-gap tolerance of the TV denoiser [default: 0.00001]
    #[arg(long)]
    pub tv_tol: Option<f64>,
    /// Start the background at zero instead of the initial rank-one fit
    #[arg(long)]
    pub no_warm_start: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Background,
    Detection,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// What to score [default: background]
    #[arg(long, value_enum)]
    pub task: Option<Task>,
    /// Predicted frames: a directory or a single image
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Ground truth: a directory or a single image
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Report path; .json writes JSON, anything else CSV
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// `key = value` config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Gray-level error threshold for pEPs/pCEPs [default: 20]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Print the frame-averaged detection scores instead of pixel totals
    #[arg(long)]
    pub frame_mean: bool,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    /// Foreground frames; defaults to the input recorded in --from
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Foreground masks; defaults to the mask/ folder of --from
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Output directory of a decompose run
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// New background image
    #[arg(long)]
    pub background: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Rows of the synthetic matrix
    #[arg(long, default_value_t = 10_000)]
    pub rows: usize,
    /// Comma-separated column counts
    #[arg(long, value_delimiter = ',', default_values_t = [25, 50, 75, 100, 125, 150, 175, 200])]
    pub cols: Vec<usize>,
    /// Timed iterations per size
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    /// Seed of the synthetic data
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path; prints to stdout when absent
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Use the worker pool instead of a single thread
    #[arg(long)]
    pub parallel: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
    {
        eprintln!("error: cannot start worker threads: {e}");
        return ExitCode::from(1);
    }
    let res = match &cli.command {
        Command::Decompose(a) => commands::decompose(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Synthesize(a) => commands::synthesize(a),
        Command::Bench(a) => commands::bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
