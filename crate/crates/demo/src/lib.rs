//! Browser demo bindings.
//!
//! Each exported function takes plain strings and numbers and returns a JSON
//! string, so the page needs no generated type glue beyond `wasm-bindgen`.
//! The `*_json` functions hold the logic and are tested natively.

use std::collections::BTreeMap;

use claimret::retrieval::build_index;
use claimret::{
    aggregate, analyze, AnalyzerConfig, AnalyzerMode, FactCheck, FactCheckId, FitCorpus, IndexConfig, Post,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn analyzer_config(mode: &str, ngram_min: usize, ngram_max: usize, lowercase: bool) -> Result<AnalyzerConfig, String> {
    let mode: AnalyzerMode = mode.parse().map_err(|e: claimret::analyzer::AnalyzerError| e.to_string())?;
    let cfg = AnalyzerConfig { mode, ngram_min, ngram_max, lowercase };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TokenCount {
    token: String,
    count: usize,
}

#[derive(Serialize)]
struct AnalyzeOutput {
    tokens: Vec<String>,
    distinct: Vec<TokenCount>,
}

/// Tokens of `text` in emission order plus per-token counts.
pub fn analyze_json(
    text: &str,
    mode: &str,
    ngram_min: usize,
    ngram_max: usize,
    lowercase: bool,
) -> Result<String, String> {
    let cfg = analyzer_config(mode, ngram_min, ngram_max, lowercase)?;
    let tokens = analyze(text, &cfg);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &tokens {
        *counts.entry(t).or_default() += 1;
    }
    let distinct = counts.into_iter().map(|(token, count)| TokenCount { token: token.to_string(), count }).collect();
    to_json(&AnalyzeOutput { tokens: tokens.clone(), distinct })
}

#[derive(Serialize)]
struct Hit {
    rank: usize,
    line: u64,
    score: f64,
    claim: String,
}

#[derive(Serialize)]
struct RankOutput {
    vocabulary: usize,
    claims: usize,
    hits: Vec<Hit>,
}

/// Index the non-empty lines of `claims` (one claim per line, identified by
/// line number) and rank them against `query`. `max_features == 0` keeps
/// the full vocabulary.
#[allow(clippy::too_many_arguments)]
pub fn rank_json(
    claims: &str,
    query: &str,
    mode: &str,
    ngram_min: usize,
    ngram_max: usize,
    lowercase: bool,
    max_features: usize,
    k: usize,
) -> Result<String, String> {
    let analyzer = analyzer_config(mode, ngram_min, ngram_max, lowercase)?;
    let fact_checks: Vec<FactCheck> = claims
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| FactCheck {
            id: FactCheckId(i as u64 + 1),
            claim_original: line.trim().to_string(),
            claim_english: String::new(),
            claim_languages: Vec::new(),
            instances: Vec::new(),
            title: String::new(),
        })
        .collect();
    if fact_checks.is_empty() {
        return Err("enter at least one claim".into());
    }
    let cfg = IndexConfig { analyzer, max_features: (max_features > 0).then_some(max_features) };
    let index = build_index(&fact_checks, "demo", &cfg, FitCorpus::FactChecksOnly, &[] as &[Post])
        .map_err(|e| e.to_string())?;
    let by_id: BTreeMap<FactCheckId, &str> = fact_checks.iter().map(|f| (f.id, f.claim_original.as_str())).collect();
    let hits = index
        .query_text(query, k.max(1))
        .into_iter()
        .enumerate()
        .map(|(i, r)| Hit {
            rank: i + 1,
            line: r.fact_check_id.0,
            score: r.score,
            claim: by_id[&r.fact_check_id].to_string(),
        })
        .collect();
    to_json(&RankOutput { vocabulary: index.model().vocabulary().len(), claims: index.len(), hits })
}

#[derive(Serialize)]
struct AggregateOutput {
    languages: usize,
    average: f64,
}

/// Unweighted mean of per-language scores given as `lang score` lines
/// (whitespace, `=`, `:` or `,` separated).
pub fn aggregate_json(lines: &str) -> Result<String, String> {
    let mut scores = BTreeMap::new();
    for (n, line) in lines.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(|c: char| c.is_whitespace() || "=:,".contains(c)).filter(|p| !p.is_empty());
        let (Some(lang), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("line {}: expected `language score`", n + 1));
        };
        let value: f64 = value.parse().map_err(|_| format!("line {}: `{value}` is not a number", n + 1))?;
        if scores.insert(lang.to_string(), value).is_some() {
            return Err(format!("line {}: {lang} listed twice", n + 1));
        }
    }
    let average = aggregate(&scores).map_err(|e| e.to_string())?;
    to_json(&AggregateOutput { languages: scores.len(), average })
}

#[wasm_bindgen(js_name = analyzeText)]
pub fn analyze_text(
    text: &str,
    mode: &str,
    ngram_min: usize,
    ngram_max: usize,
    lowercase: bool,
) -> Result<String, JsValue> {
    analyze_json(text, mode, ngram_min, ngram_max, lowercase).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = rankClaims)]
#[allow(clippy::too_many_arguments)]
pub fn rank_claims(
    claims: &str,
    query: &str,
    mode: &str,
    ngram_min: usize,
    ngram_max: usize,
    lowercase: bool,
    max_features: usize,
    k: usize,
) -> Result<String, JsValue> {
    rank_json(claims, query, mode, ngram_min, ngram_max, lowercase, max_features, k).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = aggregateScores)]
pub fn aggregate_scores(lines: &str) -> Result<String, JsValue> {
    aggregate_json(lines).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn analyze_counts_tokens() {
        let out: Value = serde_json::from_str(&analyze_json("Bb aa bb", "word", 1, 1, true).unwrap()).unwrap();
        assert_eq!(out["tokens"], serde_json::json!(["bb", "aa", "bb"]));
        assert_eq!(out["distinct"][1], serde_json::json!({"token": "bb", "count": 2}));
        assert!(analyze_json("x", "bpe", 1, 1, true).is_err());
        assert!(analyze_json("x", "char", 3, 2, true).is_err());
    }

    #[test]
    fn ranks_by_line_number() {
        let claims = "garlic cures flu\n\nmoon landing staged\n5g towers spread virus\n";
        let out: Value =
            serde_json::from_str(&rank_json(claims, "is the moon landing fake", "word", 1, 1, true, 0, 2).unwrap())
                .unwrap();
        assert_eq!(out["claims"], 3);
        assert_eq!(out["hits"][0]["line"], 3);
        assert_eq!(out["hits"][0]["claim"], "moon landing staged");
        assert_eq!(out["hits"].as_array().unwrap().len(), 2);
        assert!(rank_json("  \n", "q", "word", 1, 1, true, 0, 10).is_err());
    }

    #[test]
    fn aggregates_lines() {
        let out: Value = serde_json::from_str(&aggregate_json("eng 0.5\nspa=1.0\n\nfra: 0.0").unwrap()).unwrap();
        assert_eq!(out["languages"], 3);
        assert_eq!(out["average"], 0.5);
        assert!(aggregate_json("eng 0.5\neng 0.6").is_err());
        assert!(aggregate_json("eng high").is_err());
        assert!(aggregate_json("").is_err());
    }
}
