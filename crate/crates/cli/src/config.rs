//! Engine configuration: a TOML file plus command-line overrides, and the
//! sweep grid file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use claimret::analyzer::{AnalyzerConfig, AnalyzerMode};
use claimret::{FitCorpus, IndexConfig, Split};
use serde::Deserialize;

/// Values accepted in `--config FILE`. Every key is optional; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
    pub split: Option<String>,
    pub analyzer: Option<String>,
    pub ngram: Option<[usize; 2]>,
    pub lowercase: Option<bool>,
    pub max_features: Option<usize>,
    pub k: Option<usize>,
    pub fit_corpus: Option<String>,
    pub out: Option<PathBuf>,
    pub wrap_key: Option<String>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub extra_text_columns: Vec<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }
}

/// Command-line overrides, all optional.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
    pub split: Option<String>,
    pub analyzer: Option<String>,
    pub ngram: Option<String>,
    pub no_lowercase: bool,
    pub max_features: Option<usize>,
    pub k: Option<usize>,
    pub fit_corpus: Option<String>,
    pub out: Option<PathBuf>,
    pub wrap_key: Option<String>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub data_dir: PathBuf,
    pub tasks_path: PathBuf,
    pub index: IndexConfig,
    pub k: usize,
    pub split: Split,
    pub fit_corpus: FitCorpus,
    pub output_path: PathBuf,
    pub wrap_key: Option<String>,
    pub parallelism: usize,
    pub extra_text_columns: Vec<String>,
}

pub const DEFAULT_OUTPUT: &str = "monolingual_predictions.json";

pub fn parse_split(s: &str) -> Result<Split> {
    match s {
        "dev" => Ok(Split::Dev),
        "test" => Ok(Split::Test),
        other => bail!("unknown split `{other}` (expected dev or test)"),
    }
}

/// `MIN,MAX` or a single `N`.
pub fn parse_ngram(s: &str) -> Result<[usize; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums = parts
        .iter()
        .map(|p| p.parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("invalid n-gram range `{s}`"))?;
    match nums.as_slice() {
        [n] => Ok([*n, *n]),
        [a, b] => Ok([*a, *b]),
        _ => bail!("invalid n-gram range `{s}` (expected MIN,MAX)"),
    }
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl EngineConfig {
    /// Merge file values and flags (flags win) and validate the result.
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self> {
        let data_dir = flags.data_dir.or(file.data_dir).unwrap_or_else(|| PathBuf::from("."));
        let tasks_path = flags.tasks.or(file.tasks).unwrap_or_else(|| data_dir.join(claimret::pipeline::TASKS_FILE));
        let split = parse_split(flags.split.or(file.split).as_deref().unwrap_or("dev"))?;
        let mode: AnalyzerMode = flags.analyzer.or(file.analyzer).as_deref().unwrap_or("word").parse()?;
        let [ngram_min, ngram_max] = match flags.ngram {
            Some(s) => parse_ngram(&s)?,
            None => file.ngram.unwrap_or([1, 1]),
        };
        let lowercase = !flags.no_lowercase && file.lowercase.unwrap_or(true);
        let analyzer = AnalyzerConfig { mode, ngram_min, ngram_max, lowercase };
        analyzer.validate()?;
        let max_features = flags.max_features.or(file.max_features);
        if max_features == Some(0) {
            bail!("max-features must be at least 1");
        }
        let k = flags.k.or(file.k).unwrap_or(claimret::retrieval::DEFAULT_K);
        if k == 0 {
            bail!("k must be at least 1");
        }
        let fit_corpus = match flags.fit_corpus.or(file.fit_corpus) {
            Some(s) => s.parse::<FitCorpus>().map_err(anyhow::Error::msg)?,
            None => FitCorpus::default(),
        };
        let parallelism = flags.jobs.or(file.jobs).unwrap_or_else(default_jobs);
        if parallelism == 0 {
            bail!("jobs must be at least 1");
        }
        Ok(EngineConfig {
            data_dir,
            tasks_path,
            index: IndexConfig { analyzer, max_features },
            k,
            split,
            fit_corpus,
            output_path: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
            wrap_key: flags.wrap_key.or(file.wrap_key),
            parallelism,
            extra_text_columns: file.extra_text_columns,
        })
    }
}

/// Raw sweep grid row as written in the grid file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGridRow {
    name: Option<String>,
    analyzer: String,
    ngram: Option<[usize; 2]>,
    max_features: Option<usize>,
    lowercase: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    row: Vec<RawGridRow>,
}

/// Parse a grid file:
///
/// ```toml
/// [[row]]
/// name = "15 K"
/// analyzer = "word"
/// ngram = [1, 1]
/// max_features = 15000
/// ```
///
/// All rows are validated; the error lists every invalid row.
pub fn parse_grid(text: &str) -> Result<Vec<claimret::eval::GridRow>> {
    let raw: RawGrid = toml::from_str(text).context("invalid grid file")?;
    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for (i, r) in raw.row.into_iter().enumerate() {
        let label = r.name.clone().unwrap_or_else(|| default_row_name(&r));
        let checked = (|| -> Result<claimret::eval::GridRow> {
            let mode: AnalyzerMode = r.analyzer.parse()?;
            let [ngram_min, ngram_max] = r.ngram.unwrap_or([1, 1]);
            let analyzer = AnalyzerConfig { mode, ngram_min, ngram_max, lowercase: r.lowercase.unwrap_or(true) };
            analyzer.validate()?;
            if r.max_features == Some(0) {
                bail!("max_features must be at least 1");
            }
            Ok(claimret::eval::GridRow {
                name: label.clone(),
                config: IndexConfig { analyzer, max_features: r.max_features },
            })
        })();
        match checked {
            Ok(row) => rows.push(row),
            Err(e) => problems.push(format!("grid row {} (`{label}`): {e}", i + 1)),
        }
    }
    if !problems.is_empty() {
        bail!(problems.join("\n"));
    }
    Ok(rows)
}

fn default_row_name(r: &RawGridRow) -> String {
    let mut name = r.analyzer.clone();
    if let Some([a, b]) = r.ngram {
        name.push_str(&format!(" ({a},{b})"));
    }
    if let Some(m) = r.max_features {
        name.push_str(&format!(" {m}"));
    }
    name
}
