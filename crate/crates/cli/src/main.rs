//! `uregm`: generate data, select features, train, predict and evaluate.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "uregm", version, about = "Predict CPU and memory deltas caused by refactoring code smells")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// JSON file with default flag values; command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Error stream format.
    #[arg(long, global = true, value_enum)]
    pub error_format: Option<ErrorFormat>,
    /// Keep wall-clock timings in primary artifacts (breaks byte-identity).
    #[arg(long, global = true)]
    pub embed_timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErrorFormat {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (or the anchor tables) as CSV.
    GenData(GenDataArgs),
    /// Genetic feature selection; writes the GA result as JSON.
    SelectFeatures(SelectArgs),
    /// Train one learner or an ensemble; writes the model as JSON.
    Train(TrainArgs),
    /// Predict with a trained model; writes sample_id,prediction CSV.
    Predict(PredictArgs),
    /// Cross-validated comparison of models.
    Evaluate(EvaluateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenData(_) => "gen-data",
            Command::SelectFeatures(_) => "select-features",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Evaluate(_) => "evaluate",
        }
    }
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Target noise standard deviation, percentage points.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_parser = parse_target)]
    pub target: Option<uregm::TargetKind>,
    /// Five comma-separated weights over GodClass, GodMethod,
    /// CyclicDependency, LongParameter, SpaghettiCode.
    #[arg(long)]
    pub smell_mix: Option<String>,
    /// Write the literal and cleaned anchor tables instead of data.
    #[arg(long)]
    pub anchors: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_parser = parse_target)]
    pub target: Option<uregm::TargetKind>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Folds used by the fitness function.
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub crossover_rate: Option<f64>,
    #[arg(long)]
    pub mutation_rate: Option<f64>,
    #[arg(long)]
    pub elitism: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_parser = parse_target)]
    pub target: Option<uregm::TargetKind>,
    /// GA result or bare bit array; all features when omitted.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// lir, pr, lr, rf, uregm or reap.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_parser = parse_target)]
    pub target: Option<uregm::TargetKind>,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Comma-separated subset of lir,pr,lr,rf,reap,uregm.
    #[arg(long)]
    pub models: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report file; without it json/csv go to standard output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// text, json or csv.
    #[arg(long)]
    pub format: Option<String>,
}

fn parse_target(s: &str) -> Result<uregm::TargetKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "cpu" => Ok(uregm::TargetKind::Cpu),
        "mem" | "memory" => Ok(uregm::TargetKind::Memory),
        _ => Err(format!("unknown target `{s}` (valid: cpu, mem)")),
    }
}

/// `--error-format json` must apply even when parsing fails.
fn wants_json_errors(args: &[String]) -> bool {
    args.windows(2)
        .any(|w| w[0] == "--error-format" && w[1] == "json")
        || args.iter().any(|a| a == "--error-format=json")
}

fn report_error(e: &CliError, json: bool) {
    if json {
        eprintln!("{}", e.to_json());
    } else {
        eprintln!("uregm: error: {e}");
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            if wants_json_errors(&args) {
                let msg = e.render().to_string();
                let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
                report_error(&CliError::Usage(first.to_string()), true);
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    let json = match cli.error_format {
        Some(f) => f == ErrorFormat::Json,
        None => matches!(&cli.command, Command::Evaluate(a) if a.format.as_deref() == Some("json")),
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e, json);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
