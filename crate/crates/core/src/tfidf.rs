//! TF-IDF fitting and transformation.
//!
//! Weights are raw term counts times smoothed idf, `ln((1 + n) / (1 + df)) + 1`,
//! and every document vector is L2-normalized. With `max_features` set the
//! vocabulary keeps the terms with the highest total corpus count, ties broken
//! by ascending term, and indices are assigned in term order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzer::{analyze, AnalyzerConfig, AnalyzerError};

pub const MODEL_FORMAT: &str = "claimret-tfidf";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TfidfError {
    #[error("document frequency {df} exceeds corpus size {n}")]
    DfOutOfRange { df: usize, n: usize },
    #[error("cannot fit on an empty corpus")]
    EmptyCorpus,
    #[error("empty vocabulary: no document produced any token")]
    EmptyVocabulary,
    #[error("max_features must be at least 1")]
    InvalidMaxFeatures,
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
    #[error("model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Format(String),
    #[error("model format version {found} is not supported (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },
}

/// Smoothed inverse document frequency.
pub fn idf_weight(df: usize, n: usize) -> Result<f64, TfidfError> {
    if df > n {
        return Err(TfidfError::DfOutOfRange { df, n });
    }
    Ok(((1 + n) as f64 / (1 + df) as f64).ln() + 1.0)
}

/// Sparse vector with strictly increasing indices and no zero weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Sorts by index, sums duplicate indices and drops zero weights.
    pub fn new(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => merged.push((i, w)),
            }
        }
        merged.retain(|&(_, w)| w != 0.0);
        SparseVector { entries: merged }
    }

    pub fn empty() -> Self {
        SparseVector::default()
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    /// Dot product by merging the two index lists, summed in index order.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_terms(terms: Vec<String>, counts: Vec<u64>) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { terms, counts, index }
    }

    pub fn get(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    /// Terms in index order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Total corpus count of each term, in index order.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    analyzer: AnalyzerConfig,
    max_features: Option<usize>,
    n_docs: usize,
}

#[derive(Default)]
struct TermStats {
    count: u64,
    df: usize,
}

/// Fit vocabulary and idf weights on `corpus`.
pub fn fit<S: AsRef<str> + Sync>(
    corpus: &[S],
    analyzer: &AnalyzerConfig,
    max_features: Option<usize>,
) -> Result<TfidfModel, TfidfError> {
    analyzer.validate()?;
    if corpus.is_empty() {
        return Err(TfidfError::EmptyCorpus);
    }
    if max_features == Some(0) {
        return Err(TfidfError::InvalidMaxFeatures);
    }

    let per_doc: Vec<HashMap<String, u64>> = corpus
        .par_iter()
        .map(|doc| {
            let mut counts = HashMap::new();
            for tok in analyze(doc.as_ref(), analyzer) {
                *counts.entry(tok).or_insert(0) += 1;
            }
            counts
        })
        .collect();

    let mut stats: HashMap<String, TermStats> = HashMap::new();
    for doc in per_doc {
        for (term, c) in doc {
            let s = stats.entry(term).or_default();
            s.count += c;
            s.df += 1;
        }
    }
    if stats.is_empty() {
        return Err(TfidfError::EmptyVocabulary);
    }

    let mut selected: Vec<(String, TermStats)> = stats.into_iter().collect();
    if let Some(limit) = max_features {
        if selected.len() > limit {
            selected.sort_unstable_by(|(ta, a), (tb, b)| b.count.cmp(&a.count).then_with(|| ta.cmp(tb)));
            selected.truncate(limit);
        }
    }
    selected.sort_unstable_by(|(a, _), (b, _)| a.cmp(b));

    let n = corpus.len();
    let idf = selected.iter().map(|(_, s)| idf_weight(s.df, n)).collect::<Result<Vec<_>, _>>()?;
    let (terms, counts) = selected.into_iter().map(|(t, s)| (t, s.count)).unzip();
    Ok(TfidfModel {
        vocabulary: Vocabulary::from_terms(terms, counts),
        idf,
        analyzer: *analyzer,
        max_features,
        n_docs: n,
    })
}

impl TfidfModel {
    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn analyzer(&self) -> &AnalyzerConfig {
        &self.analyzer
    }

    pub fn max_features(&self) -> Option<usize> {
        self.max_features
    }

    /// Number of documents the model was fitted on.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// L2-normalized TF-IDF vector of `doc`. Out-of-vocabulary tokens are
    /// ignored; a document with no known token maps to the empty vector.
    pub fn transform(&self, doc: &str) -> SparseVector {
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for tok in analyze(doc, &self.analyzer) {
            if let Some(i) = self.vocabulary.get(&tok) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(u32, f64)> =
            counts.into_iter().map(|(i, c)| (i, c as f64 * self.idf[i as usize])).collect();
        entries.sort_unstable_by_key(|&(i, _)| i);
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        SparseVector { entries }
    }

    pub fn transform_many<S: AsRef<str> + Sync>(&self, docs: &[S]) -> Vec<SparseVector> {
        docs.par_iter().map(|d| self.transform(d.as_ref())).collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), TfidfError> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &self.to_file()).map_err(|e| TfidfError::Format(e.to_string()))?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TfidfError> {
        let file: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))
            .map_err(|e| TfidfError::Format(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TfidfError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| TfidfError::Format(e.to_string()))?;
        Self::from_file(file)
    }

    fn to_file(&self) -> ModelFile {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            analyzer: self.analyzer,
            max_features: self.max_features,
            n_docs: self.n_docs,
            terms: self.vocabulary.terms.clone(),
            term_counts: self.vocabulary.counts.clone(),
            idf: self.idf.clone(),
        }
    }

    fn from_file(file: ModelFile) -> Result<Self, TfidfError> {
        if file.format != MODEL_FORMAT {
            return Err(TfidfError::Format(format!("unexpected format tag `{}`", file.format)));
        }
        if file.version != MODEL_FORMAT_VERSION {
            return Err(TfidfError::FormatVersion { found: file.version, expected: MODEL_FORMAT_VERSION });
        }
        if file.terms.len() != file.idf.len() || file.terms.len() != file.term_counts.len() {
            return Err(TfidfError::Format("terms, term_counts and idf differ in length".into()));
        }
        if file.terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TfidfError::Format("terms are not strictly sorted".into()));
        }
        file.analyzer.validate()?;
        Ok(TfidfModel {
            vocabulary: Vocabulary::from_terms(file.terms, file.term_counts),
            idf: file.idf,
            analyzer: file.analyzer,
            max_features: file.max_features,
            n_docs: file.n_docs,
        })
    }
}

/// On-disk model container (JSON).
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    analyzer: AnalyzerConfig,
    max_features: Option<usize>,
    n_docs: usize,
    terms: Vec<String>,
    term_counts: Vec<u64>,
    idf: Vec<f64>,
}
