//! `claimret`: predict, evaluate and sweep monolingual claim retrieval.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal error.

mod commands;
mod config;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use crate::config::{EngineConfig, FileConfig, Overrides};

#[derive(Parser)]
#[command(name = "claimret", version, about = "TF-IDF retrieval of fact-checked claims for social-media posts")]
struct Cli {
    /// TOML file with default engine settings; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-language indexes and write the top-k fact-checks for each post.
    Predict(PredictArgs),
    /// Score a predictions file with success@k.
    Evaluate(EvaluateCli),
    /// Run predict and evaluate for every row of a grid file and print a table.
    Sweep(SweepArgs),
    /// Load the data files and report malformed rows and dangling pair IDs.
    IngestCheck(IngestCheckArgs),
}

#[derive(Args, Default)]
struct EngineArgs {
    /// Directory holding fact_checks.csv, posts.csv and pairs.csv.
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Task definition file (default: DATA_DIR/tasks.json).
    #[arg(long, value_name = "FILE")]
    tasks: Option<PathBuf>,
    /// Post split to predict: dev or test.
    #[arg(long)]
    split: Option<String>,
    /// word, char or char_wb.
    #[arg(long)]
    analyzer: Option<String>,
    /// N-gram range as MIN,MAX.
    #[arg(long, value_name = "MIN,MAX")]
    ngram: Option<String>,
    /// Keep the most frequent N terms per language.
    #[arg(long, value_name = "N")]
    max_features: Option<usize>,
    /// Number of fact-checks returned per post.
    #[arg(long)]
    k: Option<usize>,
    /// Documents used to fit the vocabulary: fact-checks or fact-checks+posts.
    #[arg(long)]
    fit_corpus: Option<String>,
    /// Worker threads (default: available cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Disable lowercasing before tokenization.
    #[arg(long)]
    no_lowercase: bool,
}

impl EngineArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            data_dir: self.data_dir.clone(),
            tasks: self.tasks.clone(),
            split: self.split.clone(),
            analyzer: self.analyzer.clone(),
            ngram: self.ngram.clone(),
            no_lowercase: self.no_lowercase,
            max_features: self.max_features,
            k: self.k,
            fit_corpus: self.fit_corpus.clone(),
            jobs: self.jobs,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Output file (default: monolingual_predictions.json).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Nest the predictions under this top-level key.
    #[arg(long, value_name = "KEY")]
    wrap_key: Option<String>,
}

#[derive(Args)]
struct EvaluateCli {
    /// Predictions file produced by `predict`.
    #[arg(long, value_name = "FILE")]
    predictions: PathBuf,
    /// Gold pairs CSV.
    #[arg(long, value_name = "FILE")]
    pairs: PathBuf,
    /// Task definition file.
    #[arg(long, value_name = "FILE")]
    tasks: PathBuf,
    /// dev or test.
    #[arg(long, default_value = "dev")]
    split: String,
    #[arg(long, default_value_t = claimret::retrieval::DEFAULT_K)]
    k: usize,
    /// Also write the report as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// TOML grid file with `[[row]]` entries.
    #[arg(long, value_name = "FILE")]
    grid: PathBuf,
    /// Also write all rows as JSON.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestCheckArgs {
    #[arg(long, value_name = "DIR", default_value = ".")]
    data_dir: PathBuf,
    #[arg(long, value_name = "FILE")]
    tasks: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage = 1,
    Data = 2,
    Internal = 3,
}

#[derive(Debug)]
pub struct CliError {
    kind: ErrorKind,
    error: anyhow::Error,
}

impl CliError {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        CliError { kind: ErrorKind::Usage, error: error.into() }
    }
    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        CliError { kind: ErrorKind::Data, error: error.into() }
    }
    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        CliError { kind: ErrorKind::Internal, error: error.into() }
    }
}

/// Tag an error with the exit code it maps to.
pub trait ResultExt<T> {
    fn usage(self) -> Result<T, CliError>;
    fn data(self) -> Result<T, CliError>;
    fn internal(self) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn usage(self) -> Result<T, CliError> {
        self.map_err(CliError::usage)
    }
    fn data(self) -> Result<T, CliError> {
        self.map_err(CliError::data)
    }
    fn internal(self) -> Result<T, CliError> {
        self.map_err(CliError::internal)
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .without_time()
        .try_init();
}

fn engine_config(config: Option<&PathBuf>, flags: Overrides) -> Result<EngineConfig, CliError> {
    let file = match config {
        Some(path) => FileConfig::load(path).usage()?,
        None => FileConfig::default(),
    };
    EngineConfig::resolve(file, flags).usage()
}

fn with_pool<T>(jobs: usize, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().internal()?;
    pool.install(f)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Predict(args) => {
            let mut flags = args.engine.overrides();
            flags.out = args.out;
            flags.wrap_key = args.wrap_key;
            let cfg = engine_config(cli.config.as_ref(), flags)?;
            with_pool(cfg.parallelism, || commands::predict(&cfg))
        }
        Command::Evaluate(args) => {
            let split = config::parse_split(&args.split).usage()?;
            if args.k == 0 {
                return Err(CliError::usage(anyhow::anyhow!("k must be at least 1")));
            }
            commands::evaluate(&commands::EvaluateArgs {
                predictions: args.predictions,
                pairs: args.pairs,
                tasks: args.tasks,
                split,
                k: args.k,
                out: args.out,
            })
        }
        Command::Sweep(args) => {
            let cfg = engine_config(cli.config.as_ref(), args.engine.overrides())?;
            with_pool(cfg.parallelism, || commands::sweep(&cfg, &args.grid, args.out.as_deref()))
        }
        Command::IngestCheck(args) => {
            let extra = match cli.config.as_ref() {
                Some(path) => FileConfig::load(path).usage()?.extra_text_columns,
                None => Vec::new(),
            };
            commands::ingest_check(&args.data_dir, args.tasks.as_deref(), extra, args.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(ErrorKind::Usage as u8) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError { kind, error }) => {
            let line = serde_json::json!({
                "error": format!("{error:#}"),
                "kind": match kind {
                    ErrorKind::Usage => "usage",
                    ErrorKind::Data => "data",
                    ErrorKind::Internal => "internal",
                },
            });
            eprintln!("{line}");
            ExitCode::from(kind as u8)
        }
    }
}
