//! Loading of the task files: `fact_checks.csv`, `posts.csv`, `pairs.csv`
//! and `tasks.json`.
//!
//! CSV cells that hold literal expressions (claims, instances, OCR, verdicts)
//! are newline-normalized and parsed with [`parse_literal`]. Loading is
//! tolerant: a row that cannot be decoded is recorded in the [`LoadReport`]
//! and skipped, so `loaded + malformed == total_rows` always holds.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::literal::{normalize_csv_field, parse_literal, LiteralValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactCheckId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PostId(pub u64);

impl fmt::Display for FactCheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for PostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One appearance of a claim or post: when and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub timestamp: Option<f64>,
    pub source: String,
}

/// Language code with detector confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageTag {
    pub code: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactCheck {
    pub id: FactCheckId,
    pub claim_original: String,
    pub claim_english: String,
    pub claim_languages: Vec<LanguageTag>,
    pub instances: Vec<Instance>,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: PostId,
    pub instances: Vec<Instance>,
    /// Every textual rendition (OCR, body, original and English) in column order.
    pub text_fields: Vec<String>,
    pub verdicts: Vec<String>,
    pub text_languages: Vec<LanguageTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub fact_check_id: FactCheckId,
    pub post_id: PostId,
}

/// ID lists of one monolingual sub-task.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageTask {
    pub fact_checks: Vec<FactCheckId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub posts_train: Vec<PostId>,
    #[serde(default)]
    pub posts_dev: Vec<PostId>,
    #[serde(default)]
    pub posts_test: Vec<PostId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Dev,
    Test,
}

impl LanguageTask {
    pub fn posts(&self, split: Split) -> &[PostId] {
        match split {
            Split::Dev => &self.posts_dev,
            Split::Test => &self.posts_test,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskConfig {
    pub tasks: BTreeMap<String, LanguageTask>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalformedRow {
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub file: String,
    pub total_rows: usize,
    pub loaded: usize,
    pub malformed: Vec<MalformedRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    pub report: LoadReport,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{file}: cannot read header: {message}")]
    Header { file: String, message: String },
    #[error("{file}: required column `{column}` not found in header")]
    MissingColumn { file: String, column: &'static str },
    #[error("{file}: invalid JSON: {message}")]
    Json { file: String, message: String },
    #[error("schema error at `{key_path}`: {message}")]
    Schema { key_path: String, message: String },
}

/// Options for `posts.csv`.
#[derive(Debug, Clone, Default)]
pub struct PostOptions {
    /// Extra column names whose cells are appended to `text_fields`.
    pub extra_text_columns: Vec<String>,
}

/// Accepted header names per logical field, matched case-insensitively.
pub mod aliases {
    pub const FACT_CHECK_ID: &[&str] = &["fact_check_id", "id", "fact_check"];
    pub const CLAIM: &[&str] = &["claim", "claim_text"];
    pub const INSTANCES: &[&str] = &["instances"];
    pub const TITLE: &[&str] = &["title"];
    pub const POST_ID: &[&str] = &["post_id", "id", "post"];
    pub const VERDICTS: &[&str] = &["verdicts", "verdict"];
    pub const POST_TEXT: &[&str] = &["ocr", "text", "post_text", "body"];
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            IngestError::FileNotFound(path.to_path_buf())
        } else {
            IngestError::Io { path: path.to_path_buf(), source }
        }
    })
}

fn file_label(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Decoded CSV table: header plus rows, each row either cells or a decode error.
struct CsvRows {
    header: Vec<String>,
    rows: Vec<Result<Vec<String>, String>>,
}

fn read_csv<R: Read>(reader: R, file: &str) -> Result<CsvRows, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr
        .byte_headers()
        .map_err(|e| IngestError::Header { file: file.to_string(), message: e.to_string() })?
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let h = String::from_utf8_lossy(h);
            let h = if i == 0 { h.trim_start_matches('\u{feff}') } else { &h };
            h.trim().to_ascii_lowercase()
        })
        .collect::<Vec<_>>();
    let width = header.len();
    let mut rows = Vec::new();
    for record in rdr.byte_records() {
        let row = match record {
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => {
                // the stream is unusable after an I/O failure
                rows.push(Err(format!("CSV error: {e}")));
                break;
            }
            Err(e) => Err(format!("CSV error: {e}")),
            Ok(rec) if rec.len() != width => Err(format!("expected {width} fields, found {}", rec.len())),
            Ok(rec) => rec
                .iter()
                .enumerate()
                .map(|(i, cell)| {
                    String::from_utf8(cell.to_vec()).map_err(|_| format!("invalid UTF-8 in column {}", header[i]))
                })
                .collect(),
        };
        rows.push(row);
    }
    Ok(CsvRows { header, rows })
}

fn find_column(header: &[String], names: &[&str]) -> Option<usize> {
    names.iter().find_map(|n| header.iter().position(|h| h == n))
}

fn require_column(header: &[String], names: &'static [&'static str], file: &str) -> Result<usize, IngestError> {
    find_column(header, names).ok_or(IngestError::MissingColumn { file: file.to_string(), column: names[0] })
}

fn parse_id(cell: &str, column: &str) -> Result<u64, String> {
    let t = cell.trim();
    if let Ok(v) = t.parse::<u64>() {
        return Ok(v);
    }
    // pandas may write integer columns as floats
    match t.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 => Ok(x as u64),
        _ => Err(format!("{column}: not an integer ID: {t:?}")),
    }
}

fn parse_cell(cell: &str, column: &str) -> Result<Option<LiteralValue>, String> {
    if cell.trim().is_empty() {
        return Ok(None);
    }
    parse_literal(&normalize_csv_field(cell)).map(Some).map_err(|e| format!("{column}: {e}"))
}

fn languages(value: &LiteralValue, column: &str) -> Result<Vec<LanguageTag>, String> {
    let items = value.as_seq().ok_or_else(|| format!("{column}: language list expected"))?;
    items
        .iter()
        .map(|item| match item.as_seq() {
            Some([code, conf]) => {
                let code = code.as_str().ok_or_else(|| format!("{column}: language code"))?;
                let confidence = conf.as_f64().ok_or_else(|| format!("{column}: language confidence"))?;
                if !(0.0..=1.0).contains(&confidence) {
                    return Err(format!("{column}: confidence {confidence} outside [0, 1]"));
                }
                Ok(LanguageTag { code: code.to_string(), confidence })
            }
            _ => Err(format!("{column}: (language, confidence) pair expected")),
        })
        .collect()
}

fn instances(value: Option<&LiteralValue>, column: &str) -> Result<Vec<Instance>, String> {
    let Some(value) = value else { return Ok(Vec::new()) };
    let items = value.as_seq().ok_or_else(|| format!("{column}: list expected"))?;
    items
        .iter()
        .map(|item| match item.as_seq() {
            Some([ts, src]) => {
                let timestamp = match ts {
                    LiteralValue::None => None,
                    other => Some(other.as_f64().ok_or_else(|| format!("{column}: timestamp"))?),
                };
                let source = src.as_str().ok_or_else(|| format!("{column}: source"))?;
                Ok(Instance { timestamp, source: source.to_string() })
            }
            _ => Err(format!("{column}: (timestamp, source) pair expected")),
        })
        .collect()
}

/// A translated text triple `(original, english, languages)`, or a bare string.
fn text_triple(value: &LiteralValue, column: &str) -> Result<(String, String, Vec<LanguageTag>), String> {
    match value {
        LiteralValue::Str(s) => Ok((s.clone(), String::new(), Vec::new())),
        LiteralValue::Tuple(items) | LiteralValue::List(items) => {
            let text = |i: usize| -> Result<String, String> {
                match items.get(i) {
                    None | Some(LiteralValue::None) => Ok(String::new()),
                    Some(v) => {
                        v.as_str().map(str::to_string).ok_or_else(|| format!("{column}: text expected at position {i}"))
                    }
                }
            };
            let langs = match items.get(2) {
                None | Some(LiteralValue::None) => Vec::new(),
                Some(v) => languages(v, column)?,
            };
            Ok((text(0)?, text(1)?, langs))
        }
        _ => Err(format!("{column}: text tuple expected")),
    }
}

fn finish<T>(file: String, total: usize, records: Vec<T>, malformed: Vec<MalformedRow>) -> Loaded<T> {
    debug_assert_eq!(records.len() + malformed.len(), total);
    let report = LoadReport { file, total_rows: total, loaded: records.len(), malformed };
    Loaded { records, report }
}

pub fn load_fact_checks(path: &Path) -> Result<Loaded<FactCheck>, IngestError> {
    read_fact_checks(open(path)?, &file_label(path))
}

pub fn read_fact_checks<R: Read>(reader: R, file: &str) -> Result<Loaded<FactCheck>, IngestError> {
    let table = read_csv(reader, file)?;
    let h = &table.header;
    let id_col = require_column(h, aliases::FACT_CHECK_ID, file)?;
    let claim_col = require_column(h, aliases::CLAIM, file)?;
    let inst_col = find_column(h, aliases::INSTANCES);
    let title_col = find_column(h, aliases::TITLE);

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    let total = table.rows.len();
    for (i, row) in table.rows.into_iter().enumerate() {
        let parsed = row.and_then(|cells| {
            let id = FactCheckId(parse_id(&cells[id_col], "fact_check_id")?);
            let (claim_original, claim_english, claim_languages) = match parse_cell(&cells[claim_col], "claim")? {
                Some(v) => text_triple(&v, "claim")?,
                None => Default::default(),
            };
            let instances = match inst_col {
                Some(c) => instances(parse_cell(&cells[c], "instances")?.as_ref(), "instances")?,
                None => Vec::new(),
            };
            let title = match title_col {
                Some(c) => match parse_cell(&cells[c], "title") {
                    Ok(Some(v)) => text_triple(&v, "title")?.0,
                    Ok(None) => String::new(),
                    // titles are sometimes stored unquoted
                    Err(_) => cells[c].trim().to_string(),
                },
                None => String::new(),
            };
            if !seen.insert(id) {
                return Err(format!("duplicate fact_check_id {id}"));
            }
            Ok(FactCheck { id, claim_original, claim_english, claim_languages, instances, title })
        });
        match parsed {
            Ok(fc) => records.push(fc),
            Err(cause) => malformed.push(MalformedRow { row: i + 1, cause }),
        }
    }
    Ok(finish(file.to_string(), total, records, malformed))
}

pub fn load_posts(path: &Path) -> Result<Loaded<Post>, IngestError> {
    load_posts_with(path, &PostOptions::default())
}

pub fn load_posts_with(path: &Path, opts: &PostOptions) -> Result<Loaded<Post>, IngestError> {
    read_posts(open(path)?, &file_label(path), opts)
}

pub fn read_posts<R: Read>(reader: R, file: &str, opts: &PostOptions) -> Result<Loaded<Post>, IngestError> {
    let table = read_csv(reader, file)?;
    let h = &table.header;
    let id_col = require_column(h, aliases::POST_ID, file)?;
    let inst_col = find_column(h, aliases::INSTANCES);
    let verdict_col = find_column(h, aliases::VERDICTS);
    let extras: Vec<String> = opts.extra_text_columns.iter().map(|c| c.trim().to_ascii_lowercase()).collect();
    let text_cols: Vec<usize> = h
        .iter()
        .enumerate()
        .filter(|(_, name)| aliases::POST_TEXT.contains(&name.as_str()) || extras.contains(name))
        .map(|(i, _)| i)
        .collect();

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    let total = table.rows.len();
    for (i, row) in table.rows.into_iter().enumerate() {
        let parsed = row.and_then(|cells| {
            let id = PostId(parse_id(&cells[id_col], "post_id")?);
            let instances = match inst_col {
                Some(c) => instances(parse_cell(&cells[c], "instances")?.as_ref(), "instances")?,
                None => Vec::new(),
            };
            let verdicts = match verdict_col {
                Some(c) => match parse_cell(&cells[c], "verdicts")? {
                    None => Vec::new(),
                    Some(LiteralValue::Str(s)) => vec![s],
                    Some(v) => v
                        .as_seq()
                        .ok_or("verdicts: list expected")?
                        .iter()
                        .map(|x| x.as_str().map(str::to_string).ok_or("verdicts: text expected"))
                        .collect::<Result<_, _>>()?,
                },
                None => Vec::new(),
            };
            let mut text_fields = Vec::new();
            let mut text_languages = Vec::new();
            for &c in &text_cols {
                let column = h[c].as_str();
                let is_extra = !aliases::POST_TEXT.contains(&column);
                let value = match parse_cell(&cells[c], column) {
                    Ok(v) => v,
                    Err(_) if is_extra => Some(LiteralValue::Str(cells[c].clone())),
                    Err(e) => return Err(e),
                };
                match value {
                    None => text_fields.push(String::new()),
                    Some(LiteralValue::List(items)) => {
                        // OCR: one triple per image
                        for item in &items {
                            let (orig, eng, langs) = text_triple(item, column)?;
                            text_fields.push(orig);
                            text_fields.push(eng);
                            text_languages.extend(langs);
                        }
                    }
                    Some(v) => {
                        let (orig, eng, langs) = text_triple(&v, column)?;
                        text_fields.push(orig);
                        if matches!(v, LiteralValue::Tuple(_)) {
                            text_fields.push(eng);
                        }
                        text_languages.extend(langs);
                    }
                }
            }
            if !seen.insert(id) {
                return Err(format!("duplicate post_id {id}"));
            }
            Ok(Post { id, instances, text_fields, verdicts, text_languages })
        });
        match parsed {
            Ok(p) => records.push(p),
            Err(cause) => malformed.push(MalformedRow { row: i + 1, cause }),
        }
    }
    Ok(finish(file.to_string(), total, records, malformed))
}

pub fn load_pairs(path: &Path) -> Result<Loaded<Pair>, IngestError> {
    read_pairs(open(path)?, &file_label(path))
}

pub fn read_pairs<R: Read>(reader: R, file: &str) -> Result<Loaded<Pair>, IngestError> {
    let table = read_csv(reader, file)?;
    let fc_col = require_column(&table.header, aliases::FACT_CHECK_ID, file)?;
    let post_col = require_column(&table.header, aliases::POST_ID, file)?;
    let mut records = Vec::new();
    let mut malformed = Vec::new();
    let total = table.rows.len();
    for (i, row) in table.rows.into_iter().enumerate() {
        let parsed = row.and_then(|cells| {
            Ok(Pair {
                fact_check_id: FactCheckId(parse_id(&cells[fc_col], "fact_check_id")?),
                post_id: PostId(parse_id(&cells[post_col], "post_id")?),
            })
        });
        match parsed {
            Ok(p) => records.push(p),
            Err(cause) => malformed.push(MalformedRow { row: i + 1, cause }),
        }
    }
    Ok(finish(file.to_string(), total, records, malformed))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairViolation {
    pub pair: Pair,
    pub missing_fact_check: bool,
    pub missing_post: bool,
}

/// Split pairs into those whose IDs resolve and a list of violations.
pub fn check_pairs(pairs: &[Pair], fact_checks: &[FactCheck], posts: &[Post]) -> (Vec<Pair>, Vec<PairViolation>) {
    let fc_ids: HashSet<FactCheckId> = fact_checks.iter().map(|f| f.id).collect();
    let post_ids: HashSet<PostId> = posts.iter().map(|p| p.id).collect();
    let mut valid = Vec::new();
    let mut violations = Vec::new();
    for &pair in pairs {
        let missing_fact_check = !fc_ids.contains(&pair.fact_check_id);
        let missing_post = !post_ids.contains(&pair.post_id);
        if missing_fact_check || missing_post {
            violations.push(PairViolation { pair, missing_fact_check, missing_post });
        } else {
            valid.push(pair);
        }
    }
    (valid, violations)
}

/// Reads `tasks.json`.
///
/// Accepts either the flat form `{"eng": {...}, ...}` or the task's nested
/// form `{"monolingual": {"eng": {...}}, "crosslingual": {...}}`, of which
/// only the monolingual part is used. Each language entry needs
/// `fact_checks`; `posts_dev`, `posts_test` and `posts_train` default to
/// empty lists.
pub fn load_task_config(path: &Path) -> Result<TaskConfig, IngestError> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_task_config(&text, &file_label(path))
}

pub fn parse_task_config(text: &str, file: &str) -> Result<TaskConfig, IngestError> {
    use serde_json::Value;
    let root: Value =
        serde_json::from_str(text).map_err(|e| IngestError::Json { file: file.to_string(), message: e.to_string() })?;
    let schema = |key_path: &str, message: &str| IngestError::Schema {
        key_path: key_path.to_string(),
        message: message.to_string(),
    };
    let obj = root.as_object().ok_or_else(|| schema("$", "object expected"))?;
    let (prefix, langs) = match obj.get("monolingual") {
        Some(Value::Object(m)) => ("monolingual.", m),
        Some(_) => return Err(schema("monolingual", "object expected")),
        None => ("", obj),
    };

    let mut tasks = BTreeMap::new();
    for (lang, entry) in langs {
        let at = format!("{prefix}{lang}");
        let entry = entry.as_object().ok_or_else(|| schema(&at, "object expected"))?;
        let ids = |key: &str, required: bool| -> Result<Vec<u64>, IngestError> {
            let key_path = format!("{at}.{key}");
            match entry.get(key) {
                None if required => Err(schema(&key_path, "required key missing")),
                None => Ok(Vec::new()),
                Some(Value::Array(items)) => {
                    items.iter().map(|v| v.as_u64().ok_or_else(|| schema(&key_path, "integer IDs expected"))).collect()
                }
                Some(_) => Err(schema(&key_path, "array expected")),
            }
        };
        let task = LanguageTask {
            fact_checks: ids("fact_checks", true)?.into_iter().map(FactCheckId).collect(),
            posts_train: ids("posts_train", false)?.into_iter().map(PostId).collect(),
            posts_dev: ids("posts_dev", false)?.into_iter().map(PostId).collect(),
            posts_test: ids("posts_test", false)?.into_iter().map(PostId).collect(),
        };
        let dev: HashSet<_> = task.posts_dev.iter().collect();
        if let Some(p) = task.posts_test.iter().find(|p| dev.contains(p)) {
            return Err(schema(&at, &format!("post {p} is in both posts_dev and posts_test")));
        }
        tasks.insert(lang.clone(), task);
    }
    Ok(TaskConfig { tasks })
}

/// Text of a post as fed to the vectorizer: non-empty text fields, then
/// verdicts, joined by single spaces.
pub fn post_text(post: &Post) -> String {
    join_non_empty(post.text_fields.iter().chain(&post.verdicts).map(String::as_str))
}

/// Original claim, English claim and title, joined by single spaces.
pub fn claim_text(fc: &FactCheck) -> String {
    join_non_empty([fc.claim_original.as_str(), fc.claim_english.as_str(), fc.title.as_str()])
}

fn join_non_empty<'a>(parts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for part in parts.into_iter().filter(|p| !p.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(part);
    }
    out
}

/// Everything the pipeline reads from a data directory.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub fact_checks: Vec<FactCheck>,
    pub posts: Vec<Post>,
    pub reports: Vec<LoadReport>,
}

impl Corpus {
    pub fn fact_check_map(&self) -> HashMap<FactCheckId, &FactCheck> {
        self.fact_checks.iter().map(|f| (f.id, f)).collect()
    }

    pub fn post_map(&self) -> HashMap<PostId, &Post> {
        self.posts.iter().map(|p| (p.id, p)).collect()
    }
}
