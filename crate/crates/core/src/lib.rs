//! Monolingual fact-checked claim retrieval.
//!
//! Social-media posts are matched against previously fact-checked claims of
//! the same language with a TF-IDF vectorizer and exact cosine search, and
//! predictions are scored with success@K.
//!
//! The modules follow the data flow:
//!
//! * [`literal`] and [`ingest`] read the task CSV/JSON files into typed records.
//! * [`analyzer`] turns text into word or character n-gram tokens.
//! * [`tfidf`] fits vocabularies and idf weights and produces unit sparse vectors.
//! * [`retrieval`] builds per-language indexes and answers top-k queries.
//! * [`eval`] computes success@K, language averages and configuration sweeps.
//! * [`pipeline`] wires the above together for a data directory.

pub mod analyzer;
pub mod eval;
pub mod ingest;
pub mod literal;
pub mod pipeline;
pub mod retrieval;
pub mod tfidf;

pub use analyzer::{analyze, preprocess, AnalyzerConfig, AnalyzerMode};
pub use eval::{aggregate, success_at_k, EvalReport, GoldStandard};
pub use ingest::{claim_text, post_text, FactCheck, FactCheckId, Pair, Post, PostId, Split, TaskConfig};
pub use literal::{normalize_csv_field, parse_literal, LiteralValue};
pub use retrieval::{cosine, FitCorpus, IndexConfig, RankedResult, RetrievalIndex};
pub use tfidf::{fit, idf_weight, SparseVector, TfidfModel};
