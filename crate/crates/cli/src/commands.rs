use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use claimret::eval::{self, EvalReport, SweepData};
use claimret::ingest::{self, load_pairs, load_task_config, PostOptions};
use claimret::pipeline::{self, PAIRS_FILE};
use claimret::retrieval::Predictions;
use claimret::{FactCheckId, PostId, Split};
use serde_json::json;
use tracing::info;

use crate::config::EngineConfig;
use crate::{CliError, ResultExt};

/// Write `bytes` to a temporary file next to `path`, then rename it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// `{"<post_id>": [fact_check_id, ...], ...}` with keys in ascending numeric
/// order, optionally nested under `wrap_key`.
pub fn render_predictions(preds: &Predictions, wrap_key: Option<&str>) -> String {
    let inner = serde_json::to_string(preds).expect("predictions serialize");
    match wrap_key {
        Some(key) => format!("{{{}:{inner}}}\n", serde_json::to_string(key).expect("key serializes")),
        None => format!("{inner}\n"),
    }
}

/// Reads a prediction file. Post IDs are object keys; fact-check IDs may be
/// integers or numeric strings. A file whose only key is non-numeric and
/// holds an object is treated as wrapped and unwrapped.
pub fn parse_predictions(text: &str) -> anyhow::Result<Predictions> {
    let mut value: serde_json::Value = serde_json::from_str(text).context("predictions: invalid JSON")?;
    loop {
        let obj = value.as_object().ok_or_else(|| anyhow!("predictions: JSON object expected"))?;
        match obj.iter().next() {
            Some((key, inner)) if obj.len() == 1 && key.parse::<u64>().is_err() && inner.is_object() => {
                value = inner.clone();
            }
            _ => break,
        }
    }
    let obj = value.as_object().expect("checked above");
    let mut preds = Predictions::new();
    for (key, ranked) in obj {
        let post = key
            .trim()
            .parse::<u64>()
            .map(PostId)
            .map_err(|_| anyhow!("predictions: post ID `{key}` is not an integer"))?;
        let list = ranked.as_array().ok_or_else(|| anyhow!("predictions: value for post {key} is not an array"))?;
        let ids = list
            .iter()
            .map(|v| {
                match v {
                    serde_json::Value::Number(n) => n.as_u64(),
                    serde_json::Value::String(s) => s.trim().parse().ok(),
                    _ => None,
                }
                .map(FactCheckId)
                .ok_or_else(|| anyhow!("predictions: invalid fact-check ID {v} for post {key}"))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        preds.insert(post, ids);
    }
    Ok(preds)
}

fn require_path(path: &Path, what: &str) -> Result<(), CliError> {
    if !path.exists() {
        return Err(CliError::data(anyhow!("{what} not found: {}", path.display())));
    }
    Ok(())
}

fn load_inputs(cfg: &EngineConfig) -> Result<(ingest::Corpus, claimret::TaskConfig), CliError> {
    require_path(&cfg.data_dir, "data directory")?;
    require_path(&cfg.tasks_path, "tasks file")?;
    let started = Instant::now();
    let opts = PostOptions { extra_text_columns: cfg.extra_text_columns.clone() };
    let corpus = pipeline::load_corpus(&cfg.data_dir, &opts).data()?;
    let task = load_task_config(&cfg.tasks_path).data()?;
    for r in &corpus.reports {
        info!(file = %r.file, loaded = r.loaded, malformed = r.malformed.len(), "loaded");
        if !r.malformed.is_empty() {
            tracing::warn!("{}: skipped {} malformed rows (run ingest-check for details)", r.file, r.malformed.len());
        }
    }
    info!(languages = task.tasks.len(), elapsed_ms = started.elapsed().as_millis() as u64, "inputs ready");
    Ok((corpus, task))
}

pub fn predict(cfg: &EngineConfig) -> Result<(), CliError> {
    let (corpus, task) = load_inputs(cfg)?;
    let started = Instant::now();
    let preds = pipeline::run_predictions(
        &corpus.fact_checks,
        &corpus.posts,
        &task,
        &cfg.index,
        cfg.fit_corpus,
        cfg.split,
        cfg.k,
    )
    .data()?;
    info!(posts = preds.len(), elapsed_ms = started.elapsed().as_millis() as u64, "predicted");
    write_atomic(&cfg.output_path, render_predictions(&preds, cfg.wrap_key.as_deref()).as_bytes()).internal()?;
    eprintln!("wrote {} predictions to {}", preds.len(), cfg.output_path.display());
    Ok(())
}

pub struct EvaluateArgs {
    pub predictions: PathBuf,
    pub pairs: PathBuf,
    pub tasks: PathBuf,
    pub split: Split,
    pub k: usize,
    pub out: Option<PathBuf>,
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    require_path(&args.predictions, "predictions file")?;
    let text = std::fs::read_to_string(&args.predictions)
        .with_context(|| format!("cannot read {}", args.predictions.display()))
        .data()?;
    let preds = parse_predictions(&text).data()?;
    let pairs = load_pairs(&args.pairs).data()?;
    if !pairs.report.malformed.is_empty() {
        tracing::warn!("{}: skipped {} malformed rows", pairs.report.file, pairs.report.malformed.len());
    }
    let task = load_task_config(&args.tasks).data()?;
    let report = eval::evaluate(&preds, &pairs.records, &task, args.split, args.k).data()?;
    print_report("S@", &report);
    if let Some(out) = &args.out {
        let body = serde_json::to_string_pretty(&report.to_json()).internal()? + "\n";
        write_atomic(out, body.as_bytes()).internal()?;
    }
    Ok(())
}

fn print_report(prefix: &str, report: &EvalReport) {
    println!("{}", eval::render_table(&[(format!("{prefix}{}", report.k), Ok(report.clone()))]).trim_end());
    let posts: Vec<String> = report.n_posts.iter().map(|(l, n)| format!("{l}={n}")).collect();
    if !posts.is_empty() {
        println!("gold posts: {}", posts.join(" "));
    }
}

pub fn sweep(cfg: &EngineConfig, grid_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let grid_text = std::fs::read_to_string(grid_path)
        .with_context(|| format!("cannot read grid file {}", grid_path.display()))
        .usage()?;
    let grid = crate::config::parse_grid(&grid_text).usage()?;
    let (corpus, task) = load_inputs(cfg)?;
    let pairs_path = cfg.data_dir.join(PAIRS_FILE);
    let pairs = load_pairs(&pairs_path).data()?;
    let data = SweepData { fact_checks: &corpus.fact_checks, posts: &corpus.posts, pairs: &pairs.records, task: &task };
    let rows = eval::sweep(&data, &grid, cfg.k, cfg.split, cfg.fit_corpus);
    let table: Vec<(String, Result<EvalReport, String>)> =
        rows.iter().map(|r| (r.name.clone(), r.outcome.clone())).collect();
    print!("{}", eval::render_table(&table));

    if let Some(out) = out {
        let json: Vec<serde_json::Value> = rows
            .iter()
            .map(|r| {
                let a = r.config.analyzer;
                let mut row = json!({
                    "name": r.name,
                    "analyzer": a.mode.as_str(),
                    "ngram": [a.ngram_min, a.ngram_max],
                    "lowercase": a.lowercase,
                    "max_features": r.config.max_features,
                });
                match &r.outcome {
                    Ok(report) => row["report"] = report.to_json(),
                    Err(e) => row["error"] = json!(e),
                }
                row
            })
            .collect();
        let body = serde_json::to_string_pretty(&json).internal()? + "\n";
        write_atomic(out, body.as_bytes()).internal()?;
    }
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        return Err(CliError::data(anyhow!("{failed} of {} sweep rows failed", rows.len())));
    }
    Ok(())
}

pub fn ingest_check(
    data_dir: &Path,
    tasks: Option<&Path>,
    extra_text_columns: Vec<String>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    require_path(data_dir, "data directory")?;
    let opts = PostOptions { extra_text_columns };
    let corpus = pipeline::load_corpus(data_dir, &opts).data()?;
    let pairs = load_pairs(&data_dir.join(PAIRS_FILE)).data()?;
    let (_, violations) = ingest::check_pairs(&pairs.records, &corpus.fact_checks, &corpus.posts);

    let mut files = corpus.reports.clone();
    files.push(pairs.report.clone());
    let mut report = json!({ "files": files, "pair_violations": violations });

    let tasks_path = tasks.map(Path::to_path_buf).unwrap_or_else(|| data_dir.join(pipeline::TASKS_FILE));
    if tasks_path.exists() {
        let task = load_task_config(&tasks_path).data()?;
        let fc_ids = corpus.fact_check_map();
        let post_ids = corpus.post_map();
        let mut languages = BTreeMap::new();
        for (lang, lt) in &task.tasks {
            let missing_fc = lt.fact_checks.iter().filter(|id| !fc_ids.contains_key(id)).count();
            let missing_posts =
                lt.posts_dev.iter().chain(&lt.posts_test).filter(|id| !post_ids.contains_key(id)).count();
            languages.insert(
                lang.clone(),
                json!({
                    "fact_checks": lt.fact_checks.len(),
                    "posts_dev": lt.posts_dev.len(),
                    "posts_test": lt.posts_test.len(),
                    "missing_fact_checks": missing_fc,
                    "missing_posts": missing_posts,
                }),
            );
        }
        report["tasks"] = json!(languages);
    }

    for f in &files {
        eprintln!("{}: {} rows, {} loaded, {} malformed", f.file, f.total_rows, f.loaded, f.malformed.len());
    }
    eprintln!("pairs with unknown IDs: {}", violations.len());
    let body = serde_json::to_string_pretty(&report).internal()? + "\n";
    match out {
        Some(path) => write_atomic(path, body.as_bytes()).internal()?,
        None => print!("{body}"),
    }
    Ok(())
}
