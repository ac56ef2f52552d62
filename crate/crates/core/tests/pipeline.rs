//! Library-level run over a small data directory written on the fly.

use std::path::Path;

use claimret::eval::evaluate;
use claimret::ingest::{load_pairs, load_task_config, PostOptions};
use claimret::pipeline::{build_indexes, load_corpus, run_predictions};
use claimret::{FactCheckId, FitCorpus, IndexConfig, PostId, RetrievalIndex, Split, TfidfModel};

const FACT_CHECKS: &str = "\
fact_check_id,claim,instances,title
1,\"('Garlic cures the flu', 'Garlic cures the flu', [('eng', 1.0)])\",\"[(1525826671.0, 'https://fc.example/1')]\",
2,\"('The moon landing was staged', 'The moon landing was staged', [('eng', 0.99)])\",[],\"('Moon hoax', 'Moon hoax', [('eng', 1.0)])\"
3,\"('5G towers spread the virus', '5G towers spread the virus', [('eng', 1.0)])\",[],
4,\"('El ajo cura la gripe', 'Garlic cures the flu', [('spa', 1.0)])\",[],
5,\"('La llegada a la luna fue falsa', 'The moon landing was fake', [('spa', 0.97)])\",[],
";

const POSTS: &str = "\
post_id,instances,ocr,verdicts,text
10,\"[(1600000000.0, 'fb')]\",[],\"['False information']\",\"('Eat garlic\nit cures flu!', 'Eat garlic\nit cures flu!', [('eng', 1.0)])\"
11,\"[(1600000001.0, 'tw')]\",\"[('towers virus', 'towers virus', [('eng', 1.0)])]\",[],
12,[],[],[],\"('la luna es falsa', 'the moon is fake', [('spa', 1.0)])\"
13,[],[],[],\"('¿el ajo cura?', 'does garlic cure?', [('spa', 1.0)])\"
";

const PAIRS: &str = "fact_check_id,post_id\n1,10\n3,11\n5,12\n4,13\n";

const TASKS: &str = r#"{
  "eng": {"fact_checks": [1, 2, 3], "posts_train": [], "posts_dev": [10, 11], "posts_test": []},
  "spa": {"fact_checks": [4, 5], "posts_dev": [12, 13], "posts_test": []}
}"#;

fn write_data(dir: &Path) {
    std::fs::write(dir.join("fact_checks.csv"), FACT_CHECKS).unwrap();
    std::fs::write(dir.join("posts.csv"), POSTS).unwrap();
    std::fs::write(dir.join("pairs.csv"), PAIRS).unwrap();
    std::fs::write(dir.join("tasks.json"), TASKS).unwrap();
}

#[test]
fn predict_and_score_a_tiny_task() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    let corpus = load_corpus(dir.path(), &PostOptions::default()).unwrap();
    assert!(corpus.reports.iter().all(|r| r.malformed.is_empty()), "{:?}", corpus.reports);
    assert_eq!(corpus.posts[0].text_fields[0], "Eat garlic\nit cures flu!");
    let task = load_task_config(&dir.path().join("tasks.json")).unwrap();
    let pairs = load_pairs(&dir.path().join("pairs.csv")).unwrap().records;

    let cfg = IndexConfig::default();
    let preds =
        run_predictions(&corpus.fact_checks, &corpus.posts, &task, &cfg, FitCorpus::FactChecksOnly, Split::Dev, 2)
            .unwrap();
    assert_eq!(preds.len(), 4);
    assert_eq!(preds[&PostId(10)][0], FactCheckId(1));
    assert_eq!(preds[&PostId(11)][0], FactCheckId(3));
    assert_eq!(preds[&PostId(12)][0], FactCheckId(5));
    assert_eq!(preds[&PostId(13)][0], FactCheckId(4));
    // posts only see fact-checks of their own language
    assert!(preds[&PostId(13)].iter().all(|id| [4, 5].contains(&id.0)));

    let report = evaluate(&preds, &pairs, &task, Split::Dev, 1).unwrap();
    assert_eq!(report.per_language["eng"], 1.0);
    assert_eq!(report.per_language["spa"], 1.0);
    assert_eq!(report.average, 1.0);

    let test_split =
        run_predictions(&corpus.fact_checks, &corpus.posts, &task, &cfg, FitCorpus::FactChecksOnly, Split::Test, 2)
            .unwrap();
    assert!(test_split.is_empty());
}

#[test]
fn persisted_models_and_indexes_answer_identically() {
    let dir = tempfile::tempdir().unwrap();
    write_data(dir.path());
    let corpus = load_corpus(dir.path(), &PostOptions::default()).unwrap();
    let task = load_task_config(&dir.path().join("tasks.json")).unwrap();
    let indexes = build_indexes(
        &corpus.fact_checks,
        &corpus.posts,
        &task,
        &IndexConfig::default(),
        FitCorpus::FactChecksAndPosts,
        Split::Dev,
    )
    .unwrap();
    let eng = &indexes["eng"];

    let model_path = dir.path().join("eng.model.json");
    eng.model().save(&model_path).unwrap();
    let model = TfidfModel::load(&model_path).unwrap();
    let text = "garlic towers moon";
    assert_eq!(model.transform(text), eng.model().transform(text));

    let restored = RetrievalIndex::from_json(&eng.to_json()).unwrap();
    assert_eq!(restored.query_text(text, 3), eng.query_text(text, 3));
    assert_eq!(restored.language(), "eng");
}
