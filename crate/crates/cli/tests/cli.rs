//! End-to-end tests of the `claimret` binary on the synthetic fixture.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use claimret::ingest::{load_task_config, PostOptions};
use claimret::pipeline::{build_indexes, load_corpus};
use claimret::{AnalyzerConfig, AnalyzerMode, FitCorpus, IndexConfig, Split};
use serde_json::Value;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic")
}

fn claimret(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claimret")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().expect("stderr has an error line");
    serde_json::from_str(last).expect("error line is JSON")
}

#[test]
fn predict_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("preds.json");
    let report = dir.path().join("report.json");
    let out = claimret(&["predict", "--data-dir", path_str(&fixture()), "--out", path_str(&preds)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&preds).unwrap();
    let value: serde_json::Map<String, Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(value.len(), 30);
    let keys: Vec<u64> = text
        .trim_start_matches('{')
        .split("],")
        .map(|chunk| chunk.split('"').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]), "keys in ascending numeric order");
    assert!(value.values().all(|v| v.as_array().unwrap().len() == 10));

    let out = claimret(&[
        "evaluate",
        "--predictions",
        path_str(&preds),
        "--pairs",
        path_str(&fixture().join("pairs.csv")),
        "--tasks",
        path_str(&fixture().join("tasks.json")),
        "--out",
        path_str(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("S@10"), "{stdout}");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report["eng"], 1.0);
    assert_eq!(report["fra"], 0.8);
    assert_eq!(report["spa"], 1.0);
    assert!((report["avg"].as_f64().unwrap() - 2.8 / 3.0).abs() < 1e-12);
}

#[test]
fn wrapped_predictions_and_string_ids_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("wrapped.json");
    let out = claimret(&[
        "predict",
        "--data-dir",
        path_str(&fixture()),
        "--out",
        path_str(&preds),
        "--wrap-key",
        "monolingual",
        "--jobs",
        "1",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&preds).unwrap();
    assert!(text.starts_with("{\"monolingual\":{\"5000\":["));

    let stringly = dir.path().join("strings.json");
    let value: Value = serde_json::from_str(&text).unwrap();
    let mut converted = serde_json::Map::new();
    for (post, ids) in value["monolingual"].as_object().unwrap() {
        let ids: Vec<String> = ids.as_array().unwrap().iter().map(|v| v.to_string()).collect();
        converted.insert(post.clone(), serde_json::json!(ids));
    }
    std::fs::write(&stringly, serde_json::to_string(&converted).unwrap()).unwrap();
    for file in [&preds, &stringly] {
        let out = claimret(&[
            "evaluate",
            "--predictions",
            path_str(file),
            "--pairs",
            path_str(&fixture().join("pairs.csv")),
            "--tasks",
            path_str(&fixture().join("tasks.json")),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stdout).contains("0.9333"));
    }
}

#[test]
fn missing_prediction_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("partial.json");
    std::fs::write(&preds, r#"{"5000": [1004]}"#).unwrap();
    let out = claimret(&[
        "evaluate",
        "--predictions",
        path_str(&preds),
        "--pairs",
        path_str(&fixture().join("pairs.csv")),
        "--tasks",
        path_str(&fixture().join("tasks.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["kind"], "data");
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["predict", "--analyzer", "chars"],
        vec!["predict", "--ngram", "4,2"],
        vec!["predict", "--k", "0"],
        vec!["predict", "--max-features", "0"],
        vec!["predict", "--split", "train"],
        vec!["frobnicate"],
        vec!["predict", "--k", "ten"],
    ] {
        let out = claimret(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    assert_eq!(claimret(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_data_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = claimret(&["predict", "--data-dir", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_line(&out)["error"].as_str().unwrap().contains("tasks"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("engine.toml");
    let out_path = dir.path().join("from_config.json");
    std::fs::write(
        &cfg,
        format!(
            "data_dir = {:?}\nanalyzer = \"char_wb\"\nngram = [2, 4]\nk = 3\nout = {:?}\n",
            path_str(&fixture()),
            path_str(&out_path)
        ),
    )
    .unwrap();
    let out = claimret(&["--config", path_str(&cfg), "predict", "--k", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let value: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(value.as_object().unwrap().values().all(|v| v.as_array().unwrap().len() == 5));

    std::fs::write(&cfg, "colour = \"blue\"\n").unwrap();
    assert_eq!(claimret(&["--config", path_str(&cfg), "predict"]).status.code(), Some(1));
}

#[test]
fn sweep_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.toml");
    let json = dir.path().join("sweep.json");
    std::fs::write(
        &grid,
        "[[row]]\nname = \"W\"\nanalyzer = \"word\"\n\n[[row]]\nname = \"C-WB\"\nanalyzer = \"char_wb\"\nngram = [2, 4]\n",
    )
    .unwrap();
    let out =
        claimret(&["sweep", "--data-dir", path_str(&fixture()), "--grid", path_str(&grid), "--out", path_str(&json)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 3, "{stdout}");
    assert!(lines[0].starts_with("Sys.") && lines[0].contains("avg"));
    assert!(lines[1].starts_with("W") && lines[2].starts_with("C-WB"));
    let rows: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rows[1]["analyzer"], "char_wb");
    assert_eq!(rows[1]["report"]["k"], 10);

    std::fs::write(&grid, "[[row]]\nanalyzer = \"bpe\"\n").unwrap();
    let out = claimret(&["sweep", "--data-dir", path_str(&fixture()), "--grid", path_str(&grid)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_line(&out)["error"].as_str().unwrap().contains("grid row 1"));
}

#[test]
fn ingest_check_reports_the_malformed_row() {
    let out = claimret(&["ingest-check", "--data-dir", path_str(&fixture())]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let posts = &report["files"][1];
    assert_eq!(posts["file"], "posts.csv");
    assert_eq!(posts["total_rows"], 61);
    assert_eq!(posts["loaded"], 60);
    assert_eq!(posts["malformed"][0]["row"], 61);
    assert_eq!(report["pair_violations"].as_array().unwrap().len(), 0);
    assert_eq!(report["tasks"]["spa"]["posts_dev"], 10);
}

/// Rankings and scores frozen from scikit-learn's `TfidfVectorizer` by
/// `fixtures/synthetic/sklearn_reference.py`.
#[test]
fn matches_scikit_learn_reference() {
    let reference: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture().join("sklearn_reference.json")).unwrap()).unwrap();
    let corpus = load_corpus(&fixture(), &PostOptions::default()).unwrap();
    let task = load_task_config(&fixture().join("tasks.json")).unwrap();
    let post_by_id = corpus.post_map();
    let configs = [
        ("word", AnalyzerMode::Word, (1, 1), None),
        ("word_12_max32", AnalyzerMode::Word, (1, 2), Some(32)),
        ("char_wb_24", AnalyzerMode::CharWb, (2, 4), None),
        ("char_13_max184", AnalyzerMode::Char, (1, 3), Some(184)),
    ];
    for (name, mode, (lo, hi), max_features) in configs {
        let cfg = IndexConfig { analyzer: AnalyzerConfig::new(mode, lo, hi).unwrap(), max_features };
        let indexes =
            build_indexes(&corpus.fact_checks, &corpus.posts, &task, &cfg, FitCorpus::FactChecksOnly, Split::Dev)
                .unwrap();
        let expected: BTreeMap<String, Value> = serde_json::from_value(reference[name]["ranking"].clone()).unwrap();
        for (lang, lt) in &task.tasks {
            for post_id in &lt.posts_dev {
                let got = indexes[lang].query_top_k(post_by_id[post_id], 10);
                let want = expected[&post_id.to_string()].as_array().unwrap();
                assert_eq!(got.len(), want.len());
                for (g, w) in got.iter().zip(want) {
                    let (wid, wscore) = (w[0].as_u64().unwrap(), w[1].as_f64().unwrap());
                    assert!((g.score - wscore).abs() < 1e-9, "{name} post {post_id}: {} vs {wscore}", g.score);
                    assert_eq!(g.fact_check_id.0, wid, "{name} post {post_id}");
                }
            }
        }
    }
}
