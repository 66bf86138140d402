use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::{CliError, RunConfig, TrainingSource};
use idsim_core::{Mode, Seeding, SigmaStrategy, SimilarityConfig};

/// Gaussian-similarity anomaly detection over system-call count matrices.
#[derive(Debug, Parser)]
#[command(name = "idsim", version)]
struct Cli {
    /// Worker threads for the parallel stages; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to standard error (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a matrix file is well formed.
    Validate {
        path: PathBuf,
        /// The file has no class column.
        #[arg(long)]
        no_labels: bool,
    },
    /// Cluster a labeled training matrix and write the model and reduced features.
    Train {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long)]
        features_out: PathBuf,
        #[command(flatten)]
        params: TrainArgs,
    },
    /// Label each process of a test matrix as Normal or Abnormal.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        test: PathBuf,
        /// The test file has no class column.
        #[arg(long)]
        no_labels: bool,
        #[arg(long, default_value = "raw", value_parser = parse_mode)]
        mode: Mode,
        /// Neighbours consulted in reduced mode.
        #[arg(long, default_value_t = 1)]
        knn: usize,
        /// Predictions CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a predictions file against a labeled matrix.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Recompute the ten-process worked example and compare every cell.
    Casestudy,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Labeled training matrix.
    #[arg(long = "train", alias = "input")]
    train: Option<PathBuf>,
    /// Use the embedded ten-process matrix as the training set.
    #[arg(long)]
    case_study: bool,
}

impl SourceArgs {
    fn source(&self) -> TrainingSource {
        match &self.train {
            Some(path) => TrainingSource::File(path.clone()),
            None => TrainingSource::CaseStudy,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Seed processes by position, e.g. `--indices 2,3`.
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    indices: Option<Vec<usize>>,
    /// Draw seed processes at random from this seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    /// Gaussian width: a positive number, or `std` for per-call training deviation.
    #[arg(long, default_value = "0.5", value_parser = parse_sigma)]
    sigma: SigmaStrategy,
    /// Width used for calls whose training deviation is zero.
    #[arg(long, default_value_t = 1e-6)]
    sigma_epsilon: f64,
    /// Let identical training vectors be each other's nearest neighbour.
    #[arg(long)]
    keep_duplicates: bool,
}

impl TrainArgs {
    fn run_config(&self) -> RunConfig {
        let seeding = match (&self.indices, self.seed) {
            (Some(ix), _) => Seeding::Indices(ix.clone()),
            (None, Some(seed)) => Seeding::Random(seed),
            (None, None) => Seeding::FirstK,
        };
        RunConfig {
            k: self.k,
            seeding,
            max_iterations: self.max_iter,
            similarity: SimilarityConfig {
                sigma_strategy: self.sigma,
                zero_sigma_epsilon: self.sigma_epsilon,
            },
            keep_duplicates: self.keep_duplicates,
        }
    }
}

fn parse_sigma(s: &str) -> Result<SigmaStrategy, String> {
    if s.eq_ignore_ascii_case("std") {
        return Ok(SigmaStrategy::PerCallTrainingStd);
    }
    let sigma: f64 = s
        .parse()
        .map_err(|_| format!("expected a positive number or `std`, got {s:?}"))?;
    if sigma > 0.0 && sigma.is_finite() {
        Ok(SigmaStrategy::Constant { sigma })
    } else {
        Err(format!("sigma must be positive, got {s}"))
    }
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    match cli.command {
        Command::Validate { path, no_labels } => commands::validate(&path, !no_labels),
        Command::Train {
            source,
            model_out,
            features_out,
            params,
        } => commands::train(&source.source(), &params.run_config(), &model_out, &features_out),
        Command::Classify {
            model,
            source,
            test,
            no_labels,
            mode,
            knn,
            out,
        } => commands::classify(&model, &source.source(), &test, !no_labels, mode, knn, out.as_deref()),
        Command::Evaluate {
            predictions,
            truth,
            json,
        } => commands::evaluate(&predictions, &truth, json),
        Command::Casestudy => commands::casestudy(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(1);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
