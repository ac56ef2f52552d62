//! Text analyzers: map a document to the token stream counted by the
//! vectorizer.
//!
//! Three modes are supported:
//!
//! * `word`: maximal runs of two or more word characters (letters, digits,
//!   underscore), optionally extended to contiguous word n-grams.
//! * `char`: character n-grams over the whole text, runs of whitespace
//!   collapsed to one space.
//! * `char_wb`: character n-grams inside each whitespace-delimited word padded
//!   with one space on each side; n-grams never cross word boundaries.
//!
//! Token boundaries follow the conventions of the widely used Python
//! vectorizer, so vocabularies are comparable with that implementation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnalyzerMode {
    #[serde(rename = "word")]
    Word,
    #[serde(rename = "char")]
    Char,
    #[serde(rename = "char_wb", alias = "charwb")]
    CharWb,
}

impl AnalyzerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AnalyzerMode::Word => "word",
            AnalyzerMode::Char => "char",
            AnalyzerMode::CharWb => "char_wb",
        }
    }
}

impl fmt::Display for AnalyzerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AnalyzerMode {
    type Err = AnalyzerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "word" => Ok(AnalyzerMode::Word),
            "char" => Ok(AnalyzerMode::Char),
            "char_wb" | "charwb" => Ok(AnalyzerMode::CharWb),
            other => Err(AnalyzerError::UnknownMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzerError {
    #[error("unknown analyzer `{0}` (expected word, char or char_wb)")]
    UnknownMode(String),
    #[error("invalid n-gram range ({min}, {max}): need 1 <= min <= max")]
    InvalidNgramRange { min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub mode: AnalyzerMode,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub lowercase: bool,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        AnalyzerConfig { mode: AnalyzerMode::Word, ngram_min: 1, ngram_max: 1, lowercase: true }
    }
}

impl AnalyzerConfig {
    pub fn new(mode: AnalyzerMode, ngram_min: usize, ngram_max: usize) -> Result<Self, AnalyzerError> {
        let cfg = AnalyzerConfig { mode, ngram_min, ngram_max, lowercase: true };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), AnalyzerError> {
        if self.ngram_min == 0 || self.ngram_min > self.ngram_max {
            return Err(AnalyzerError::InvalidNgramRange { min: self.ngram_min, max: self.ngram_max });
        }
        Ok(())
    }
}

/// Canonical composition (NFC), then case folding when `cfg.lowercase`.
pub fn preprocess(text: &str, cfg: &AnalyzerConfig) -> String {
    let composed: String = text.nfc().collect();
    if cfg.lowercase {
        composed.to_lowercase()
    } else {
        composed
    }
}

/// Letters, digits of any kind, and underscore.
fn is_word_char(c: char) -> bool {
    use GeneralCategory::*;
    c == '_'
        || matches!(
            get_general_category(c),
            UppercaseLetter
                | LowercaseLetter
                | TitlecaseLetter
                | ModifierLetter
                | OtherLetter
                | DecimalNumber
                | LetterNumber
                | OtherNumber
        )
}

/// Unicode whitespace plus the ASCII information separators, which the
/// reference tokenizer also splits on.
fn is_space(c: char) -> bool {
    c.is_whitespace() || ('\u{1c}'..='\u{1f}').contains(&c)
}

/// Tokenize `text` under `cfg`. Empty text gives no tokens; no token is empty.
///
/// `cfg` is assumed valid (see [`AnalyzerConfig::validate`]).
pub fn analyze(text: &str, cfg: &AnalyzerConfig) -> Vec<String> {
    let text = preprocess(text, cfg);
    match cfg.mode {
        AnalyzerMode::Word => word_ngrams(words(&text), cfg.ngram_min, cfg.ngram_max),
        AnalyzerMode::Char => char_ngrams(&text, cfg.ngram_min, cfg.ngram_max),
        AnalyzerMode::CharWb => char_wb_ngrams(&text, cfg.ngram_min, cfg.ngram_max),
    }
}

fn words(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    let mut len = 0;
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            if start.is_none() {
                start = Some(i);
                len = 0;
            }
            len += 1;
        } else if let Some(s) = start.take() {
            if len >= 2 {
                out.push(&text[s..i]);
            }
        }
    }
    if let Some(s) = start {
        if len >= 2 {
            out.push(&text[s..]);
        }
    }
    out
}

fn word_ngrams(words: Vec<&str>, min_n: usize, max_n: usize) -> Vec<String> {
    if max_n == 1 {
        return words.into_iter().map(str::to_string).collect();
    }
    let mut out = Vec::new();
    for n in min_n..=max_n.min(words.len()) {
        for window in words.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// Replace every run of two or more whitespace characters with one space.
fn collapse_whitespace(text: &str) -> Vec<char> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::with_capacity(chars.len());
    let mut i = 0;
    while i < chars.len() {
        if is_space(chars[i]) {
            let mut j = i + 1;
            while j < chars.len() && is_space(chars[j]) {
                j += 1;
            }
            if j - i >= 2 {
                out.push(' ');
            } else {
                out.push(chars[i]);
            }
            i = j;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

fn char_ngrams(text: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let chars = collapse_whitespace(text);
    let mut out = Vec::new();
    for n in min_n..=max_n.min(chars.len()) {
        for window in chars.windows(n) {
            out.push(window.iter().collect());
        }
    }
    out
}

fn char_wb_ngrams(text: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(is_space).filter(|w| !w.is_empty()) {
        let mut padded = Vec::with_capacity(word.len() + 2);
        padded.push(' ');
        padded.extend(word.chars());
        padded.push(' ');
        for n in min_n..=max_n {
            if padded.len() <= n {
                // short word: emitted once, whole, and no longer n-grams follow
                out.push(padded.iter().collect());
                break;
            }
            for window in padded.windows(n) {
                out.push(window.iter().collect());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(mode: AnalyzerMode, min: usize, max: usize) -> AnalyzerConfig {
        AnalyzerConfig::new(mode, min, max).unwrap()
    }

    #[test]
    fn preprocess_examples() {
        let c = AnalyzerConfig::default();
        assert_eq!(preprocess("FLIP the Bell", &c), "flip the bell");
        assert_eq!(preprocess("", &c), "");
        // decomposed E + combining acute composes to U+00C9, then folds
        let decomposed = "E\u{301}le\u{301}phant";
        assert_eq!(preprocess(decomposed, &c), "\u{e9}l\u{e9}phant");
        assert_eq!(preprocess("Éléphant", &c), "\u{e9}l\u{e9}phant");
        let keep = AnalyzerConfig { lowercase: false, ..c };
        assert_eq!(preprocess("FLIP", &keep), "FLIP");
    }

    // Expected token lists below were produced by the reference Python
    // vectorizer's `build_analyzer()` with the same mode and n-gram range.
    #[test]
    fn word_mode_matches_reference() {
        let w = cfg(AnalyzerMode::Word, 1, 1);
        assert_eq!(analyze("Flip the bell peppers", &w), ["flip", "the", "bell", "peppers"]);
        assert!(analyze("a I x", &w).is_empty());
        assert_eq!(
            analyze("Il s'agit d'un café, n°5 — don't_stop 2x ² ½ ไทยเป็นภาษา ΣΊΣΥΦΟΣ", &w),
            ["il", "agit", "un", "café", "don", "t_stop", "2x", "ไทยเป", "นภาษา", "σίσυφος"]
        );
        assert_eq!(
            analyze("one two three", &cfg(AnalyzerMode::Word, 1, 2)),
            ["one", "two", "three", "one two", "two three"]
        );
        assert_eq!(analyze("one two", &cfg(AnalyzerMode::Word, 3, 3)), Vec::<String>::new());
    }

    #[test]
    fn char_modes_match_reference() {
        assert_eq!(
            analyze("ab  c\td", &cfg(AnalyzerMode::Char, 1, 3)),
            ["a", "b", " ", "c", "\t", "d", "ab", "b ", " c", "c\t", "\td", "ab ", "b c", " c\t", "c\td"]
        );
        assert_eq!(analyze("Ab", &cfg(AnalyzerMode::Char, 2, 2)), ["ab"]);
        assert_eq!(analyze("ab cd", &cfg(AnalyzerMode::CharWb, 3, 3)), [" ab", "ab ", " cd", "cd "]);
        assert_eq!(
            analyze("a bc  défg", &cfg(AnalyzerMode::CharWb, 2, 4)),
            [
                " a", "a ", " a ", " b", "bc", "c ", " bc", "bc ", " bc ", " d", "dé", "éf", "fg", "g ", " dé", "déf",
                "éfg", "fg ", " déf", "défg", "éfg "
            ]
        );
    }

    #[test]
    fn empty_text_gives_no_tokens() {
        for mode in [AnalyzerMode::Word, AnalyzerMode::Char, AnalyzerMode::CharWb] {
            assert!(analyze("", &cfg(mode, 1, 3)).is_empty());
        }
    }

    #[test]
    fn config_validation() {
        assert!(AnalyzerConfig::new(AnalyzerMode::Char, 0, 1).is_err());
        assert!(AnalyzerConfig::new(AnalyzerMode::Char, 3, 2).is_err());
        assert_eq!("charwb".parse::<AnalyzerMode>().unwrap(), AnalyzerMode::CharWb);
        assert!(matches!("chars".parse::<AnalyzerMode>(), Err(AnalyzerError::UnknownMode(_))));
    }

    fn arb_text() -> impl Strategy<Value = String> {
        prop::collection::vec(
            prop_oneof![
                Just("ab".to_string()),
                Just(" ".to_string()),
                Just("\t\n".to_string()),
                Just("Ü".to_string()),
                Just("ไทย".to_string()),
                Just(",".to_string()),
                "[a-zA-Z0-9_]{1,6}",
                any::<char>().prop_map(|c| c.to_string()),
            ],
            0..20,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn word_tokens_are_whitespace_free(text in arb_text()) {
            for tok in analyze(&text, &cfg(AnalyzerMode::Word, 1, 1)) {
                prop_assert!(tok.chars().count() >= 2);
                prop_assert!(!tok.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn char_wb_tokens_stay_inside_words(text in arb_text(), min in 1usize..4, extra in 0usize..3) {
            let c = cfg(AnalyzerMode::CharWb, min, min + extra);
            for tok in analyze(&text, &c) {
                prop_assert!(!tok.is_empty());
                // spaces only as padding at the ends
                let inner: Vec<char> = tok.chars().collect();
                let interior = &inner[1..inner.len().saturating_sub(1).max(1)];
                prop_assert!(!interior.iter().any(|&ch| is_space(ch)), "{:?}", tok);
            }
        }

        #[test]
        fn char_count_for_single_word(word in "[a-z]{0,12}", n in 1usize..6) {
            let toks = analyze(&word, &cfg(AnalyzerMode::Char, n, n));
            prop_assert_eq!(toks.len(), (word.len() + 1).saturating_sub(n));
        }

        #[test]
        fn deterministic(text in arb_text()) {
            for mode in [AnalyzerMode::Word, AnalyzerMode::Char, AnalyzerMode::CharWb] {
                let c = cfg(mode, 1, 2);
                prop_assert_eq!(analyze(&text, &c), analyze(&text, &c));
            }
        }
    }
}
