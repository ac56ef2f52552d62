//! End-to-end wiring: load a data directory, build one index per language
//! sub-task and predict the posts of a split.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rayon::prelude::*;

use crate::ingest::{
    load_fact_checks, load_posts_with, Corpus, FactCheck, FactCheckId, IngestError, Post, PostId, PostOptions, Split,
    TaskConfig,
};
use crate::retrieval::{build_index, predict_all, FitCorpus, IndexConfig, Predictions, RetrievalError, RetrievalIndex};

pub const FACT_CHECKS_FILE: &str = "fact_checks.csv";
pub const POSTS_FILE: &str = "posts.csv";
pub const PAIRS_FILE: &str = "pairs.csv";
pub const TASKS_FILE: &str = "tasks.json";

/// Load `fact_checks.csv` and `posts.csv` from `data_dir`, in parallel.
pub fn load_corpus(data_dir: &Path, opts: &PostOptions) -> Result<Corpus, IngestError> {
    let (fcs, posts) = rayon::join(
        || load_fact_checks(&data_dir.join(FACT_CHECKS_FILE)),
        || load_posts_with(&data_dir.join(POSTS_FILE), opts),
    );
    let (fcs, posts) = (fcs?, posts?);
    Ok(Corpus { fact_checks: fcs.records, posts: posts.records, reports: vec![fcs.report, posts.report] })
}

/// One index per language that has posts in `split`.
///
/// Fact-check IDs listed in the task but absent from the corpus are skipped
/// with a warning.
pub fn build_indexes(
    fact_checks: &[FactCheck],
    posts: &[Post],
    task: &TaskConfig,
    cfg: &IndexConfig,
    policy: FitCorpus,
    split: Split,
) -> Result<BTreeMap<String, RetrievalIndex>, RetrievalError> {
    let fc_by_id: HashMap<FactCheckId, &FactCheck> = fact_checks.iter().map(|f| (f.id, f)).collect();
    let post_by_id: HashMap<PostId, &Post> = posts.iter().map(|p| (p.id, p)).collect();
    let languages: Vec<_> = task.tasks.iter().filter(|(_, lt)| !lt.posts(split).is_empty()).collect();
    languages
        .par_iter()
        .map(|(lang, lt)| {
            let selected: Vec<&FactCheck> = lt.fact_checks.iter().filter_map(|id| fc_by_id.get(id).copied()).collect();
            let missing = lt.fact_checks.len() - selected.len();
            if missing > 0 {
                log::warn!("{lang}: {missing} fact-check IDs from the task are not in the corpus");
            }
            let fit_posts: Vec<&Post> = match policy {
                FitCorpus::FactChecksOnly => Vec::new(),
                FitCorpus::FactChecksAndPosts => {
                    lt.posts(split).iter().filter_map(|id| post_by_id.get(id).copied()).collect()
                }
            };
            let index = build_index(&selected, lang, cfg, policy, &fit_posts)?;
            log::info!("{lang}: indexed {} fact-checks, vocabulary {}", index.len(), index.model().vocabulary().len());
            Ok(((*lang).clone(), index))
        })
        .collect()
}

/// Build the indexes for `split` and predict the top `k` fact-checks of each
/// of its posts.
pub fn run_predictions(
    fact_checks: &[FactCheck],
    posts: &[Post],
    task: &TaskConfig,
    cfg: &IndexConfig,
    policy: FitCorpus,
    split: Split,
    k: usize,
) -> Result<Predictions, RetrievalError> {
    let indexes = build_indexes(fact_checks, posts, task, cfg, policy, split)?;
    predict_all(&indexes, task, posts, split, k)
}
