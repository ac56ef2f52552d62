//! Per-language retrieval indexes over fact-check vectors and exact top-k
//! cosine search.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::AnalyzerConfig;
use crate::ingest::{claim_text, post_text, FactCheck, FactCheckId, Post, PostId, Split, TaskConfig};
use crate::tfidf::{fit, SparseVector, TfidfError, TfidfModel};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("language `{0}` has no fact-checks to index")]
    EmptyIndex(String),
    #[error("fact-check {0} appears twice in one index")]
    DuplicateFactCheck(FactCheckId),
    #[error("post {0} is listed in the task but was not loaded")]
    MissingPost(PostId),
    #[error("no index for language `{0}`")]
    MissingLanguageIndex(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("index file: {0}")]
    Format(String),
    #[error("language `{language}`: {source}")]
    Tfidf { language: String, source: TfidfError },
}

/// Which texts the vectorizer is fitted on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitCorpus {
    #[default]
    #[serde(rename = "fact-checks")]
    FactChecksOnly,
    #[serde(rename = "fact-checks+posts")]
    FactChecksAndPosts,
}

impl FromStr for FitCorpus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fact-checks" => Ok(FitCorpus::FactChecksOnly),
            "fact-checks+posts" => Ok(FitCorpus::FactChecksAndPosts),
            other => Err(format!("unknown fit corpus `{other}` (expected fact-checks or fact-checks+posts)")),
        }
    }
}

impl fmt::Display for FitCorpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitCorpus::FactChecksOnly => "fact-checks",
            FitCorpus::FactChecksAndPosts => "fact-checks+posts",
        })
    }
}

/// Vectorizer settings for one index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexConfig {
    pub analyzer: AnalyzerConfig,
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedResult {
    pub fact_check_id: FactCheckId,
    pub score: f64,
}

/// Cosine similarity of two L2-normalized (or empty) vectors.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    a.dot(b)
}

#[derive(Debug, Clone)]
pub struct RetrievalIndex {
    language: String,
    model: TfidfModel,
    fact_check_ids: Vec<FactCheckId>,
    vectors: Vec<SparseVector>,
    /// term index -> (row, weight), rows ascending
    postings: Vec<Vec<(u32, f64)>>,
    /// rows sorted by fact-check ID
    rows_by_id: Vec<u32>,
}

/// Fit a model for one language and vectorize its fact-checks.
///
/// With [`FitCorpus::FactChecksAndPosts`] the texts of `posts` join the
/// fitting corpus; otherwise `posts` is ignored.
pub fn build_index<F, P>(
    fact_checks: &[F],
    language: &str,
    cfg: &IndexConfig,
    policy: FitCorpus,
    posts: &[P],
) -> Result<RetrievalIndex, RetrievalError>
where
    F: Borrow<FactCheck> + Sync,
    P: Borrow<Post> + Sync,
{
    if fact_checks.is_empty() {
        return Err(RetrievalError::EmptyIndex(language.to_string()));
    }
    let mut seen = HashSet::new();
    for fc in fact_checks {
        let id = fc.borrow().id;
        if !seen.insert(id) {
            return Err(RetrievalError::DuplicateFactCheck(id));
        }
    }
    let claims: Vec<String> = fact_checks.par_iter().map(|f| claim_text(f.borrow())).collect();
    let tfidf_err = |source| RetrievalError::Tfidf { language: language.to_string(), source };
    let model = match policy {
        FitCorpus::FactChecksOnly => fit(&claims, &cfg.analyzer, cfg.max_features),
        FitCorpus::FactChecksAndPosts => {
            let mut corpus = claims.clone();
            corpus.extend(posts.iter().map(|p| post_text(p.borrow())));
            fit(&corpus, &cfg.analyzer, cfg.max_features)
        }
    }
    .map_err(tfidf_err)?;
    let vectors = model.transform_many(&claims);
    let ids = fact_checks.iter().map(|f| f.borrow().id).collect();
    Ok(RetrievalIndex::from_parts(language.to_string(), model, ids, vectors))
}

impl RetrievalIndex {
    fn from_parts(
        language: String,
        model: TfidfModel,
        fact_check_ids: Vec<FactCheckId>,
        vectors: Vec<SparseVector>,
    ) -> Self {
        let mut postings = vec![Vec::new(); model.vocabulary().len()];
        for (row, v) in vectors.iter().enumerate() {
            for &(term, w) in v.entries() {
                postings[term as usize].push((row as u32, w));
            }
        }
        let mut rows_by_id: Vec<u32> = (0..fact_check_ids.len() as u32).collect();
        rows_by_id.sort_unstable_by_key(|&r| fact_check_ids[r as usize]);
        RetrievalIndex { language, model, fact_check_ids, vectors, postings, rows_by_id }
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn model(&self) -> &TfidfModel {
        &self.model
    }

    pub fn fact_check_ids(&self) -> &[FactCheckId] {
        &self.fact_check_ids
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.fact_check_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fact_check_ids.is_empty()
    }

    pub fn query_top_k(&self, post: &Post, k: usize) -> Vec<RankedResult> {
        self.query_text(&post_text(post), k)
    }

    pub fn query_text(&self, text: &str, k: usize) -> Vec<RankedResult> {
        self.query_vector(&self.model.transform(text), k)
    }

    /// Exact top-k by cosine, score descending then fact-check ID ascending.
    ///
    /// Every indexed fact-check is a candidate; rows sharing no term with the
    /// query score 0, so a query with no known term returns the `k` smallest
    /// IDs.
    pub fn query_vector(&self, query: &SparseVector, k: usize) -> Vec<RankedResult> {
        let k = k.min(self.len());
        if k == 0 {
            return Vec::new();
        }
        let mut scores = vec![0.0f64; self.len()];
        let mut touched = Vec::new();
        // summed in ascending term order, identical to SparseVector::dot
        for &(term, qw) in query.entries() {
            for &(row, dw) in &self.postings[term as usize] {
                let s = &mut scores[row as usize];
                if *s == 0.0 {
                    touched.push(row);
                }
                *s += qw * dw;
            }
        }
        touched.retain(|&r| scores[r as usize] > 0.0);
        touched.sort_unstable();
        touched.dedup();

        let order = |a: &u32, b: &u32| {
            let (sa, sb) = (scores[*a as usize], scores[*b as usize]);
            sb.total_cmp(&sa).then_with(|| self.fact_check_ids[*a as usize].cmp(&self.fact_check_ids[*b as usize]))
        };
        if touched.len() > k {
            touched.select_nth_unstable_by(k - 1, order);
            touched.truncate(k);
        }
        touched.sort_unstable_by(order);

        let mut results: Vec<RankedResult> = touched
            .iter()
            .map(|&r| RankedResult { fact_check_id: self.fact_check_ids[r as usize], score: scores[r as usize] })
            .collect();
        if results.len() < k {
            let fill = self
                .rows_by_id
                .iter()
                .filter(|&&r| scores[r as usize] == 0.0)
                .take(k - results.len())
                .map(|&r| RankedResult { fact_check_id: self.fact_check_ids[r as usize], score: 0.0 });
            results.extend(fill);
        }
        results
    }

    /// Serializes the model together with the IDs and vectors.
    pub fn to_json(&self) -> String {
        let model: serde_json::Value = serde_json::from_str(&self.model.to_json()).expect("model json is valid");
        let file = IndexFile {
            language: self.language.clone(),
            model,
            fact_check_ids: self.fact_check_ids.clone(),
            vectors: self.vectors.clone(),
        };
        serde_json::to_string(&file).expect("index serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RetrievalError> {
        let file: IndexFile = serde_json::from_str(text).map_err(|e| RetrievalError::Format(e.to_string()))?;
        let model = TfidfModel::from_json(&file.model.to_string())
            .map_err(|source| RetrievalError::Tfidf { language: file.language.clone(), source })?;
        if file.fact_check_ids.len() != file.vectors.len() {
            return Err(RetrievalError::Format("IDs and vectors differ in length".into()));
        }
        let v = model.vocabulary().len() as u32;
        if file.vectors.iter().any(|vec| vec.entries().iter().any(|&(i, _)| i >= v)) {
            return Err(RetrievalError::Format("vector index outside vocabulary".into()));
        }
        Ok(Self::from_parts(file.language, model, file.fact_check_ids, file.vectors))
    }
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    language: String,
    model: serde_json::Value,
    fact_check_ids: Vec<FactCheckId>,
    vectors: Vec<SparseVector>,
}

pub type Predictions = BTreeMap<PostId, Vec<FactCheckId>>;

/// Top-k fact-check IDs for every post of `split`, all languages merged.
pub fn predict_all(
    indexes: &BTreeMap<String, RetrievalIndex>,
    task: &TaskConfig,
    posts: &[Post],
    split: Split,
    k: usize,
) -> Result<Predictions, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::InvalidK);
    }
    let by_id: HashMap<PostId, &Post> = posts.iter().map(|p| (p.id, p)).collect();
    let mut out = Predictions::new();
    for (language, lt) in &task.tasks {
        let ids = lt.posts(split);
        if ids.is_empty() {
            continue;
        }
        let index = indexes.get(language).ok_or_else(|| RetrievalError::MissingLanguageIndex(language.clone()))?;
        let batch: Vec<&Post> = ids
            .iter()
            .map(|id| by_id.get(id).copied().ok_or(RetrievalError::MissingPost(*id)))
            .collect::<Result<_, _>>()?;
        let ranked: Vec<(PostId, Vec<FactCheckId>)> = batch
            .par_iter()
            .map(|p| (p.id, index.query_top_k(p, k).into_iter().map(|r| r.fact_check_id).collect()))
            .collect();
        out.extend(ranked);
    }
    Ok(out)
}
