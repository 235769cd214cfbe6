mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use error::{CliError, EXIT_USAGE};

/// Surgical-skill scoring from the clearness of the operating field.
#[derive(Debug, Parser)]
#[command(name = "cof", version, args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file of flag defaults; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for every random choice the subcommand makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads for extraction and evaluation (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus: frame directories plus annotations.
    Synth(SynthArgs),
    /// Turn frame directories into normalized feature files.
    Extract(ExtractArgs),
    /// Train a scorer on every annotated video and write a checkpoint.
    Train(TrainArgs),
    /// Repeated k-fold cross-validation of the model or a baseline.
    Eval(EvalArgs),
    /// Rater-consistency statistics for an annotation file.
    Analyze(AnalyzeArgs),
    /// Frame-level scores and attention weights for one video.
    Feedback(FeedbackArgs),
}

pub const SUBCOMMANDS: [&str; 6] = ["synth", "extract", "train", "eval", "analyze", "feedback"];

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of cases.
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u32).range(1..))]
    pub cases: u32,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Shortest video, in frames.
    #[arg(long, default_value_t = 20)]
    pub frames_min: usize,
    /// Longest video, in frames.
    #[arg(long, default_value_t = 40)]
    pub frames_max: usize,
    /// Frame width and height, in pixels.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
    pub size: u32,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Directory with one subdirectory of frames per video.
    #[arg(long, value_name = "DIR")]
    pub frames_dir: PathBuf,
    /// Output directory for `<video>.cofx` files.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Directory of `<video>.cofx` files carrying a `semantic` block to
    /// append to the color features.
    #[arg(long, value_name = "DIR")]
    pub semantic_dir: Option<PathBuf>,
    /// Histogram bins per channel.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(2..=256))]
    pub bins: u32,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Training epochs.
    #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u32).range(1..))]
    pub epochs: u32,
    /// Adam learning rate.
    #[arg(long, default_value_t = 1e-4, value_parser = nonneg_f64)]
    pub lr: f64,
    /// Weight of the start/end rank term (0 disables it).
    #[arg(long, default_value_t = 1.0, value_parser = nonneg_f64)]
    pub lambda_rank: f64,
    /// Hidden layer widths, shared by both branches.
    #[arg(long, default_value = "256,64", value_parser = parse_widths)]
    pub hidden: Widths,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of `<case_id>.cofx` feature files.
    #[arg(long, value_name = "DIR")]
    pub features_dir: PathBuf,
    /// Annotation CSV.
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    /// Metric used as the training label.
    #[arg(long, default_value_t = 14, value_parser = metric)]
    pub target_metric: u32,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Checkpoint to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Loss trace CSV (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of `<case_id>.cofx` feature files.
    #[arg(long, value_name = "DIR", required_unless_present = "baseline")]
    pub features_dir: Option<PathBuf>,
    /// Annotation CSV.
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    /// Folds and repeats.
    #[arg(long, default_value = "3,15", value_parser = parse_protocol)]
    pub protocol: Protocol,
    /// Metric the model is trained on.
    #[arg(long, default_value_t = 14, value_parser = metric)]
    pub train_target: u32,
    /// Comma-separated metrics to score against (default: the train target).
    #[arg(long, value_delimiter = ',', value_parser = metric)]
    pub eval_targets: Vec<u32>,
    /// Score a training-free baseline instead of the model.
    #[arg(long, value_parser = ["mean_red", "mean_saturation", "duration"])]
    pub baseline: Option<String>,
    /// Raw frame directories, needed by the color baselines.
    #[arg(
        long,
        value_name = "DIR",
        required_if_eq_any = [("baseline", "mean_red"), ("baseline", "mean_saturation")]
    )]
    pub frames_dir: Option<PathBuf>,
    /// Permute the training labels of every run (null control).
    #[arg(long)]
    pub shuffle_labels: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Report JSON (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Annotation CSV.
    #[arg(long, value_name = "FILE")]
    pub annotations: PathBuf,
    /// Report CSV `metric_id,corr_overall,isc,sjc`.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Optional human-performance CSV.
    #[arg(long, value_name = "FILE")]
    pub human_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeedbackArgs {
    /// Model checkpoint.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Feature file of the video.
    #[arg(long, value_name = "FILE")]
    pub features: PathBuf,
    /// Output CSV `t_seconds,score_raw,score_norm,weight`.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Widths(pub Vec<usize>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub folds: usize,
    pub repeats: usize,
}

fn metric(s: &str) -> Result<u32, String> {
    match s.trim().parse::<u32>() {
        Ok(m @ (6 | 13 | 14)) => Ok(m),
        _ => Err(format!("{s:?} is not one of 6, 13, 14")),
    }
}

fn nonneg_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("{s:?} is not a finite nonnegative number")),
    }
}

fn parse_widths(s: &str) -> Result<Widths, String> {
    s.split(',')
        .map(|w| match w.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("{w:?} is not a positive width")),
        })
        .collect::<Result<_, _>>()
        .map(Widths)
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    let bad = || format!("{s:?} is not `folds,repeats` with folds >= 2 and repeats >= 1");
    let (f, r) = s.split_once(',').ok_or_else(bad)?;
    let folds: usize = f.trim().parse().map_err(|_| bad())?;
    let repeats: usize = r.trim().parse().map_err(|_| bad())?;
    if folds < 2 || repeats < 1 {
        return Err(bad());
    }
    Ok(Protocol { folds, repeats })
}

/// Applies any config file, then parses argv.
fn parse_args(mut args: Vec<String>) -> Result<Cli, clap::Error> {
    let command = Cli::command();
    let usage = |e: CliError| command.clone().error(ErrorKind::InvalidValue, e.message);
    if let Some(path) = config::take_config_flag(&mut args).map_err(usage)? {
        let entries = config::load(PathBuf::from(&path).as_path()).map_err(usage)?;
        config::splice(&mut args, &SUBCOMMANDS, config::to_args(&entries)).map_err(usage)?;
    }
    let matches = command.try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args().collect()) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let message = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let message = message.strip_prefix("error: ").unwrap_or(&message);
            eprintln!("{}", CliError::usage(message).to_json());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code as u8)
        }
    }
}
