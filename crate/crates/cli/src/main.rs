use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Debug, Parser)]
#[command(
    name = "minirocket",
    version,
    about = "MiniRocket time series features and linear classifiers"
)]
struct Cli {
    /// Worker threads. Results do not depend on this, only timings do.
    #[arg(long, global = true, env = "MINIROCKET_THREADS", default_value_t = 1,
          value_parser = clap::value_parser!(u16).range(1..))]
    threads: u16,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit transform parameters on a labelled training set.
    Fit(FitArgs),
    /// Transform a dataset to a feature CSV.
    Transform(TransformArgs),
    /// Transform a training set and fit a linear classifier.
    Train(TrainArgs),
    /// Predict with a trained model; reports accuracy when labels are present.
    Predict(PredictArgs),
    /// Compare the optimized transform with the naive one on random cases.
    Selftest(SelftestArgs),
    /// Time the optimized and naive transforms over a grid of sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct DataFormat {
    /// Field delimiter: "tab", "comma" or a single character.
    #[arg(long, default_value = "tab", value_parser = parse_delimiter)]
    delimiter: char,
}

#[derive(Debug, Args)]
struct FitArgs {
    train: PathBuf,
    #[arg(long, default_value_t = minirocket::DEFAULT_NUM_FEATURES)]
    num_features: usize,
    #[arg(long, default_value_t = minirocket::DEFAULT_MAX_DILATIONS_PER_KERNEL)]
    max_dilations: usize,
    /// Seed for example selection [default: 0].
    #[arg(long, conflicts_with = "deterministic")]
    seed: Option<u64>,
    /// Fit biases on the pooled output of all training examples. Takes no seed.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    format: DataFormat,
}

#[derive(Debug, Args)]
struct TransformArgs {
    data: PathBuf,
    #[arg(long)]
    params: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lines hold values only, no leading label.
    #[arg(long)]
    unlabelled: bool,
    #[command(flatten)]
    format: DataFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierChoice {
    Auto,
    Ridge,
    Logistic,
}

#[derive(Debug, Args)]
struct TrainArgs {
    train: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long, value_enum, default_value_t = ClassifierChoice::Auto)]
    classifier: ClassifierChoice,
    #[arg(long)]
    model_out: PathBuf,
    /// Shuffle seed for logistic regression.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    format: DataFormat,
}

#[derive(Debug, Args)]
struct PredictArgs {
    data: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    unlabelled: bool,
    /// Predictions CSV; stdout when omitted and the data has no labels.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    format: DataFormat,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u32).range(1..))]
    cases: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = minirocket::DEFAULT_NUM_FEATURES)]
    num_features: usize,
    #[arg(long, hide = true)]
    inject_parity_fault: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048")]
    lengths: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "100")]
    examples: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time the optimized transform only.
    #[arg(long)]
    no_naive: bool,
}

fn parse_delimiter(s: &str) -> Result<char, String> {
    match s {
        "tab" | "\\t" => Ok('\t'),
        "comma" => Ok(','),
        _ => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(format!("expected tab, comma or a single character, got '{s}'")),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.into())
        .build()
        .context("building thread pool");
    let result = pool.and_then(|pool| pool.install(|| commands::run(cli.command)));
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
