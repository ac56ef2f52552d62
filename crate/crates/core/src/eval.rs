//! success@K scoring, per-language aggregation and configuration sweeps.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{FactCheck, FactCheckId, Pair, Post, PostId, Split, TaskConfig};
use crate::pipeline::run_predictions;
use crate::retrieval::{FitCorpus, IndexConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no prediction for gold post {0}")]
    MissingPrediction(PostId),
    #[error("nothing to aggregate: the report has no languages")]
    EmptyReport,
    #[error("no gold posts to score")]
    EmptyGold,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("report JSON: {0}")]
    Format(String),
}

/// Relevant fact-checks per post, deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GoldStandard {
    relevant: BTreeMap<PostId, BTreeSet<FactCheckId>>,
}

impl GoldStandard {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a Pair>) -> Self {
        let mut relevant: BTreeMap<PostId, BTreeSet<FactCheckId>> = BTreeMap::new();
        for p in pairs {
            relevant.entry(p.post_id).or_default().insert(p.fact_check_id);
        }
        GoldStandard { relevant }
    }

    /// Keep only `posts`, and only links to `fact_checks`; posts left with no
    /// relevant fact-check are dropped.
    pub fn restrict(&self, posts: &[PostId], fact_checks: &HashSet<FactCheckId>) -> Self {
        let relevant = posts
            .iter()
            .filter_map(|p| {
                let set: BTreeSet<FactCheckId> =
                    self.relevant.get(p)?.iter().filter(|f| fact_checks.contains(f)).copied().collect();
                (!set.is_empty()).then_some((*p, set))
            })
            .collect();
        GoldStandard { relevant }
    }

    pub fn get(&self, post: PostId) -> Option<&BTreeSet<FactCheckId>> {
        self.relevant.get(&post)
    }

    pub fn posts(&self) -> impl Iterator<Item = PostId> + '_ {
        self.relevant.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.relevant.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relevant.is_empty()
    }
}

/// Fraction of gold posts with at least one relevant fact-check among their
/// first `k` predictions. Pass `usize::MAX` to score whole lists.
pub fn success_at_k(
    predictions: &BTreeMap<PostId, Vec<FactCheckId>>,
    gold: &GoldStandard,
    k: usize,
) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mut hits = 0usize;
    for (post, relevant) in &gold.relevant {
        let ranked = predictions.get(post).ok_or(EvalError::MissingPrediction(*post))?;
        if ranked.iter().take(k).any(|f| relevant.contains(f)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / gold.len() as f64)
}

/// Unweighted mean over languages.
pub fn aggregate(per_language: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    if per_language.is_empty() {
        return Err(EvalError::EmptyReport);
    }
    Ok(per_language.values().sum::<f64>() / per_language.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_language: BTreeMap<String, f64>,
    pub average: f64,
    pub k: usize,
    pub n_posts: BTreeMap<String, usize>,
}

impl EvalReport {
    pub fn from_scores(per_language: BTreeMap<String, f64>, k: usize) -> Result<Self, EvalError> {
        let average = aggregate(&per_language)?;
        Ok(EvalReport { per_language, average, k, n_posts: BTreeMap::new() })
    }

    /// `{"<lang>": score, ..., "avg": score, "k": k}`
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (lang, score) in &self.per_language {
            map.insert(lang.clone(), (*score).into());
        }
        map.insert("avg".into(), self.average.into());
        map.insert("k".into(), self.k.into());
        serde_json::Value::Object(map)
    }

    /// Reads the flat report form; the average is recomputed from the
    /// per-language scores.
    pub fn from_json(value: &serde_json::Value) -> Result<Self, EvalError> {
        let obj = value.as_object().ok_or_else(|| EvalError::Format("object expected".into()))?;
        let k = obj.get("k").and_then(|v| v.as_u64()).ok_or_else(|| EvalError::Format("`k` missing".into()))? as usize;
        let per_language = obj
            .iter()
            .filter(|(key, _)| key.as_str() != "k" && key.as_str() != "avg")
            .map(|(key, v)| {
                v.as_f64()
                    .map(|s| (key.clone(), s))
                    .ok_or_else(|| EvalError::Format(format!("score for `{key}` is not a number")))
            })
            .collect::<Result<_, _>>()?;
        Self::from_scores(per_language, k)
    }
}

/// Score `predictions` per language of `task` on the posts of `split`.
///
/// Gold links are limited to the language's own fact-checks; languages
/// without any gold post are left out of the report.
pub fn evaluate(
    predictions: &BTreeMap<PostId, Vec<FactCheckId>>,
    pairs: &[Pair],
    task: &TaskConfig,
    split: Split,
    k: usize,
) -> Result<EvalReport, EvalError> {
    let gold = GoldStandard::from_pairs(pairs);
    let mut per_language = BTreeMap::new();
    let mut n_posts = BTreeMap::new();
    for (lang, lt) in &task.tasks {
        let allowed: HashSet<FactCheckId> = lt.fact_checks.iter().copied().collect();
        let lang_gold = gold.restrict(lt.posts(split), &allowed);
        if lang_gold.is_empty() {
            continue;
        }
        per_language.insert(lang.clone(), success_at_k(predictions, &lang_gold, k)?);
        n_posts.insert(lang.clone(), lang_gold.len());
    }
    let mut report = EvalReport::from_scores(per_language, k)?;
    report.n_posts = n_posts;
    Ok(report)
}

/// One configuration of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub name: String,
    pub config: IndexConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub name: String,
    pub config: IndexConfig,
    /// Error message when the cell failed.
    pub outcome: Result<EvalReport, String>,
}

/// Input data for a sweep.
pub struct SweepData<'a> {
    pub fact_checks: &'a [FactCheck],
    pub posts: &'a [Post],
    pub pairs: &'a [Pair],
    pub task: &'a TaskConfig,
}

/// Index, predict and score every grid row on `split`. A failing row is
/// recorded with its error and the sweep continues.
pub fn sweep(data: &SweepData<'_>, grid: &[GridRow], k: usize, split: Split, policy: FitCorpus) -> Vec<SweepRow> {
    grid.iter()
        .map(|row| {
            let outcome = run_predictions(data.fact_checks, data.posts, data.task, &row.config, policy, split, k)
                .map_err(|e| e.to_string())
                .and_then(|preds| evaluate(&preds, data.pairs, data.task, split, k).map_err(|e| e.to_string()));
            if let Err(e) = &outcome {
                log::warn!("sweep row `{}` failed: {e}", row.name);
            }
            SweepRow { name: row.name.clone(), config: row.config, outcome }
        })
        .collect()
}

/// Aligned text table: one row per configuration, one column per language,
/// then the average. Scores have 4 decimals.
pub fn render_table(rows: &[(String, Result<EvalReport, String>)]) -> String {
    let languages: BTreeSet<&str> = rows
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .flat_map(|r| r.per_language.keys().map(String::as_str))
        .collect();
    let name_width = rows.iter().map(|(n, _)| n.chars().count()).chain([4]).max().unwrap_or(4);

    let mut out = String::new();
    let _ = write!(out, "{:<name_width$}", "Sys.");
    for lang in &languages {
        let _ = write!(out, "  {lang:>6}");
    }
    let _ = writeln!(out, "  {:>6}", "avg");
    for (name, result) in rows {
        let _ = write!(out, "{name:<name_width$}");
        match result {
            Ok(report) => {
                for lang in &languages {
                    match report.per_language.get(*lang) {
                        Some(s) => {
                            let _ = write!(out, "  {s:>6.4}");
                        }
                        None => {
                            let _ = write!(out, "  {:>6}", "-");
                        }
                    }
                }
                let _ = writeln!(out, "  {:>6.4}", report.average);
            }
            Err(e) => {
                let _ = writeln!(out, "  failed: {e}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(xs: &[u64]) -> Vec<FactCheckId> {
        xs.iter().map(|&x| FactCheckId(x)).collect()
    }

    fn pair(f: u64, p: u64) -> Pair {
        Pair { fact_check_id: FactCheckId(f), post_id: PostId(p) }
    }

    fn scores(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
        entries.iter().map(|(l, s)| (l.to_string(), *s)).collect()
    }

    #[test]
    fn success_semantics() {
        let gold = GoldStandard::from_pairs(&[pair(3, 1)]);
        let mut preds = BTreeMap::new();
        preds.insert(PostId(1), ids(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]));
        assert_eq!(success_at_k(&preds, &gold, 10).unwrap(), 1.0);

        let miss = GoldStandard::from_pairs(&[pair(99, 1)]);
        assert_eq!(success_at_k(&preds, &miss, 10).unwrap(), 0.0);

        let two = GoldStandard::from_pairs(&[pair(3, 1), pair(99, 2)]);
        preds.insert(PostId(2), ids(&[1, 2]));
        assert_eq!(success_at_k(&preds, &two, 10).unwrap(), 0.5);

        let late = GoldStandard::from_pairs(&[pair(11, 1)]);
        preds.insert(PostId(1), ids(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11]));
        assert_eq!(success_at_k(&preds, &late, 10).unwrap(), 0.0);
        assert_eq!(success_at_k(&preds, &late, 11).unwrap(), 1.0);
    }

    #[test]
    fn success_errors() {
        let gold = GoldStandard::from_pairs(&[pair(3, 1)]);
        let preds = BTreeMap::new();
        assert_eq!(success_at_k(&preds, &gold, 10), Err(EvalError::MissingPrediction(PostId(1))));
        assert_eq!(success_at_k(&preds, &GoldStandard::default(), 10), Err(EvalError::EmptyGold));
        assert_eq!(success_at_k(&preds, &gold, 0), Err(EvalError::InvalidK));
    }

    #[test]
    fn gold_dedup_and_restrict() {
        let gold = GoldStandard::from_pairs(&[pair(3, 1), pair(3, 1), pair(4, 1), pair(5, 2)]);
        assert_eq!(gold.get(PostId(1)).unwrap().len(), 2);
        let allowed: HashSet<_> = ids(&[4]).into_iter().collect();
        let r = gold.restrict(&[PostId(1), PostId(2), PostId(7)], &allowed);
        assert_eq!(r.posts().collect::<Vec<_>>(), vec![PostId(1)]);
        assert_eq!(r.get(PostId(1)).unwrap().len(), 1);
    }

    #[test]
    fn table_two_and_three_averages() {
        let fifteen_k = scores(&[
            ("eng", 0.6130),
            ("spa", 0.8358),
            ("deu", 0.6627),
            ("por", 0.8278),
            ("fra", 0.8032),
            ("ara", 0.7821),
            ("msa", 0.8000),
            ("tha", 0.8810),
        ]);
        assert!((aggregate(&fifteen_k).unwrap() - 0.7757).abs() <= 0.00005);
        let test_set = scores(&[
            ("pol", 0.626),
            ("eng", 0.452),
            ("msa", 0.8495),
            ("por", 0.558),
            ("deu", 0.690),
            ("ara", 0.820),
            ("spa", 0.546),
            ("fra", 0.814),
            ("tha", 0.8415),
            ("tur", 0.686),
        ]);
        assert!((aggregate(&test_set).unwrap() - 0.6883).abs() <= 0.00005);
        assert_eq!(aggregate(&scores(&[("x", 0.25)])).unwrap(), 0.25);
        assert_eq!(aggregate(&BTreeMap::new()), Err(EvalError::EmptyReport));
    }

    #[test]
    fn report_json_roundtrip_and_table() {
        let report = EvalReport::from_scores(scores(&[("eng", 0.5), ("fra", 1.0)]), 10).unwrap();
        let json = report.to_json();
        assert_eq!(json["avg"], 0.75);
        assert_eq!(json["k"], 10);
        assert_eq!(EvalReport::from_json(&json).unwrap(), report);

        let table = render_table(&[("15 K".to_string(), Ok(report)), ("Char".to_string(), Err("boom".to_string()))]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "Sys.     eng     fra     avg");
        assert_eq!(lines[1], "15 K  0.5000  1.0000  0.7500");
        assert_eq!(lines[2], "Char  failed: boom");
        assert_eq!(render_table(&[]), "Sys.     avg\n");
    }

    #[test]
    fn evaluate_per_language() {
        use crate::ingest::LanguageTask;
        let mut task = TaskConfig::default();
        task.tasks.insert(
            "eng".into(),
            LanguageTask { fact_checks: ids(&[1, 2]), posts_dev: vec![PostId(10), PostId(11)], ..Default::default() },
        );
        task.tasks.insert(
            "spa".into(),
            LanguageTask { fact_checks: ids(&[3]), posts_dev: vec![PostId(12)], ..Default::default() },
        );
        // post 12 links only to an English fact-check, so spa has no gold
        let pairs = [pair(1, 10), pair(2, 11), pair(1, 12)];
        let mut preds = BTreeMap::new();
        preds.insert(PostId(10), ids(&[1]));
        preds.insert(PostId(11), ids(&[1]));
        let report = evaluate(&preds, &pairs, &task, Split::Dev, 10).unwrap();
        assert_eq!(report.per_language, scores(&[("eng", 0.5)]));
        assert_eq!(report.n_posts["eng"], 2);
    }

    fn arb_case() -> impl Strategy<Value = (BTreeMap<PostId, Vec<FactCheckId>>, GoldStandard)> {
        prop::collection::btree_map(
            0u64..40,
            (prop::collection::vec(0u64..30, 0..15), prop::collection::btree_set(0u64..30, 1..4)),
            1..20,
        )
        .prop_map(|m| {
            let mut preds = BTreeMap::new();
            let mut pairs = Vec::new();
            for (p, (ranked, rel)) in m {
                preds.insert(PostId(p), ids(&ranked));
                pairs.extend(rel.into_iter().map(|f| pair(f, p)));
            }
            (preds, GoldStandard::from_pairs(&pairs))
        })
    }

    proptest! {
        #[test]
        fn success_bounded_and_monotone((preds, gold) in arb_case(), k in 1usize..20) {
            let a = success_at_k(&preds, &gold, k).unwrap();
            let b = success_at_k(&preds, &gold, k + 1).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(a <= b);
            let full = success_at_k(&preds, &gold, usize::MAX).unwrap();
            let brute = gold.posts().filter(|p| preds[p].iter().any(|f| gold.get(*p).unwrap().contains(f))).count() as f64
                / gold.len() as f64;
            prop_assert_eq!(full, brute);
        }

        #[test]
        fn aggregate_ignores_key_order(entries in prop::collection::vec(("[a-z]{3}", 0.0f64..1.0), 1..10)) {
            let forward: BTreeMap<String, f64> = entries.iter().cloned().collect();
            let reverse: BTreeMap<String, f64> = entries.iter().rev().cloned().collect();
            let mean = aggregate(&forward).unwrap();
            let values: Vec<f64> = forward.values().copied().collect();
            prop_assert!((mean - values.iter().sum::<f64>() / values.len() as f64).abs() < 1e-12);
            // same keys may keep a different value when duplicated; compare on distinct keys only
            if forward.len() == entries.len() {
                prop_assert!((aggregate(&reverse).unwrap() - mean).abs() < 1e-12);
            }
        }
    }
}
