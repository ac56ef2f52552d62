//! Parser and renderer for the Python-style literal expressions embedded in
//! the task CSV cells, e.g. `[(1525826671.0, 'fb')]` or
//! `('claim', 'claim in english', [('eng', 1.0)])`.
//!
//! The accepted grammar is the literal subset: strings (single or double
//! quoted, optional `r`/`u` prefix, adjacent literals concatenate), integers,
//! floats, `True`, `False`, `None`, tuples, lists and maps, arbitrarily nested.

use std::fmt::{self, Write as _};

use thiserror::Error;

const MAX_DEPTH: usize = 512;

/// A parsed literal value.
///
/// Maps keep their entries in source order as key/value pairs, so two maps
/// compare equal only when their entries appear in the same order.
#[derive(Debug, Clone, PartialEq)]
pub enum LiteralValue {
    Str(String),
    Float(f64),
    Int(i64),
    Bool(bool),
    None,
    List(Vec<LiteralValue>),
    Tuple(Vec<LiteralValue>),
    Map(Vec<(LiteralValue, LiteralValue)>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {position}: expected {expected}")]
pub struct SyntaxError {
    pub position: usize,
    pub expected: String,
}

impl LiteralValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            LiteralValue::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Numeric view; integers are widened to `f64`.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            LiteralValue::Float(x) => Some(*x),
            LiteralValue::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    /// Elements of a list or tuple.
    pub fn as_seq(&self) -> Option<&[LiteralValue]> {
        match self {
            LiteralValue::List(items) | LiteralValue::Tuple(items) => Some(items),
            _ => None,
        }
    }

    /// Source form that [`parse_literal`] maps back to an equal value.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for LiteralValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiteralValue::Str(s) => write_quoted(f, s),
            LiteralValue::Float(x) => write_float(f, *x),
            LiteralValue::Int(i) => write!(f, "{i}"),
            LiteralValue::Bool(true) => f.write_str("True"),
            LiteralValue::Bool(false) => f.write_str("False"),
            LiteralValue::None => f.write_str("None"),
            LiteralValue::List(items) => {
                f.write_char('[')?;
                write_items(f, items)?;
                f.write_char(']')
            }
            LiteralValue::Tuple(items) => {
                f.write_char('(')?;
                write_items(f, items)?;
                if items.len() == 1 {
                    f.write_char(',')?;
                }
                f.write_char(')')
            }
            LiteralValue::Map(entries) => {
                f.write_char('{')?;
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                f.write_char('}')
            }
        }
    }
}

fn write_items(f: &mut fmt::Formatter<'_>, items: &[LiteralValue]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

fn write_float(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x.is_nan() {
        f.write_str("nan")
    } else if x.is_infinite() {
        // out-of-range literal, parses back to infinity
        f.write_str(if x > 0.0 { "1e999" } else { "-1e999" })
    } else {
        // Debug formatting is shortest-roundtrip and always has '.' or 'e'
        write!(f, "{x:?}")
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    let quote = if s.contains('\'') && !s.contains('"') { '"' } else { '\'' };
    f.write_char(quote)?;
    for c in s.chars() {
        match c {
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            c if c == quote => {
                f.write_char('\\')?;
                f.write_char(c)?;
            }
            c if (c as u32) < 0x20 || c as u32 == 0x7f => write!(f, "\\x{:02x}", c as u32)?,
            c => f.write_char(c)?,
        }
    }
    f.write_char(quote)
}

/// Escape raw newlines so a multi-line CSV cell becomes a single-line
/// expression. Inside a string literal the escape decodes back to a newline.
pub fn normalize_csv_field(raw: &str) -> String {
    raw.replace('\n', "\\n")
}

/// Parse one literal expression. Surrounding whitespace is ignored; anything
/// else after the value is an error.
pub fn parse_literal(raw: &str) -> Result<LiteralValue, SyntaxError> {
    let mut parser = Parser { src: raw, pos: 0, depth: 0 };
    let value = parser.value()?;
    parser.skip_ws();
    if parser.pos < raw.len() {
        return Err(parser.error("end of input"));
    }
    Ok(value)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, expected: &str) -> SyntaxError {
        SyntaxError { position: self.pos, expected: expected.to_string() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn value(&mut self) -> Result<LiteralValue, SyntaxError> {
        self.skip_ws();
        let c = self.peek().ok_or_else(|| self.error("a value"))?;
        match c {
            '[' | '(' | '{' => {
                self.depth += 1;
                if self.depth > MAX_DEPTH {
                    return Err(self.error("shallower nesting"));
                }
                self.bump();
                let v = match c {
                    '[' => self.list(),
                    '(' => self.tuple(),
                    _ => self.map(),
                };
                self.depth -= 1;
                v
            }
            '\'' | '"' => self.strings(),
            '-' | '+' => {
                self.bump();
                self.skip_ws();
                match self.peek() {
                    Some(d) if d.is_ascii_digit() || d == '.' => {
                        let v = self.number(c == '-')?;
                        Ok(v)
                    }
                    _ => Err(self.error("a number after sign")),
                }
            }
            c if c.is_ascii_digit() || c == '.' => self.number(false),
            c if c.is_alphabetic() || c == '_' => self.word(),
            _ => Err(self.error("a value")),
        }
    }

    fn list(&mut self) -> Result<LiteralValue, SyntaxError> {
        let items = self.items(']')?;
        Ok(LiteralValue::List(items))
    }

    fn tuple(&mut self) -> Result<LiteralValue, SyntaxError> {
        if self.eat(')') {
            return Ok(LiteralValue::Tuple(Vec::new()));
        }
        let first = self.value()?;
        if self.eat(')') {
            // parenthesized expression, not a tuple
            return Ok(first);
        }
        if !self.eat(',') {
            return Err(self.error("',' or ')'"));
        }
        let mut items = vec![first];
        items.extend(self.items(')')?);
        Ok(LiteralValue::Tuple(items))
    }

    /// Comma-separated values up to `close`, trailing comma allowed.
    fn items(&mut self, close: char) -> Result<Vec<LiteralValue>, SyntaxError> {
        let mut items = Vec::new();
        loop {
            if self.eat(close) {
                return Ok(items);
            }
            items.push(self.value()?);
            if self.eat(close) {
                return Ok(items);
            }
            if !self.eat(',') {
                return Err(self.error(&format!("',' or '{close}'")));
            }
        }
    }

    fn map(&mut self) -> Result<LiteralValue, SyntaxError> {
        let mut entries = Vec::new();
        loop {
            if self.eat('}') {
                return Ok(LiteralValue::Map(entries));
            }
            let key = self.value()?;
            if !self.eat(':') {
                return Err(self.error("':'"));
            }
            let value = self.value()?;
            entries.push((key, value));
            if self.eat('}') {
                return Ok(LiteralValue::Map(entries));
            }
            if !self.eat(',') {
                return Err(self.error("',' or '}'"));
            }
        }
    }

    fn word(&mut self) -> Result<LiteralValue, SyntaxError> {
        let start = self.pos;
        let len = self.rest().find(|c: char| !(c.is_alphanumeric() || c == '_')).unwrap_or(self.rest().len());
        let word = &self.src[start..start + len];
        let lower = word.to_ascii_lowercase();
        // string prefixes: r'..', u'..', ur'..' and so on
        if matches!(lower.as_str(), "r" | "u" | "ur" | "ru")
            && matches!(self.src[start + len..].chars().next(), Some('\'' | '"'))
        {
            return self.strings();
        }
        self.pos = start + len;
        match word {
            "True" => Ok(LiteralValue::Bool(true)),
            "False" => Ok(LiteralValue::Bool(false)),
            "None" => Ok(LiteralValue::None),
            _ => {
                self.pos = start;
                Err(self.error("a value"))
            }
        }
    }

    /// One or more adjacent string literals, concatenated.
    fn strings(&mut self) -> Result<LiteralValue, SyntaxError> {
        let mut out = String::new();
        loop {
            self.string_into(&mut out)?;
            let save = self.pos;
            self.skip_ws();
            let next_is_string = match self.peek() {
                Some('\'' | '"') => true,
                Some(c) if c.is_ascii_alphabetic() => {
                    let len = self.rest().find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(0);
                    let prefix = self.rest()[..len].to_ascii_lowercase();
                    matches!(prefix.as_str(), "r" | "u" | "ur" | "ru")
                        && matches!(self.rest()[len..].chars().next(), Some('\'' | '"'))
                }
                _ => false,
            };
            if !next_is_string {
                self.pos = save;
                return Ok(LiteralValue::Str(out));
            }
        }
    }

    fn string_into(&mut self, out: &mut String) -> Result<(), SyntaxError> {
        let mut raw = false;
        while let Some(c) = self.peek() {
            match c {
                'r' | 'R' => raw = true,
                'u' | 'U' => {}
                _ => break,
            }
            self.bump();
        }
        let quote = match self.bump() {
            Some(q @ ('\'' | '"')) => q,
            _ => return Err(self.error("a quote")),
        };
        let triple = self.rest().starts_with([quote, quote].iter().collect::<String>().as_str());
        if triple {
            self.pos += 2;
        }
        loop {
            let c = self.bump().ok_or_else(|| self.error("closing quote"))?;
            if c == quote {
                if !triple {
                    return Ok(());
                }
                let two: String = [quote, quote].iter().collect();
                if self.rest().starts_with(two.as_str()) {
                    self.pos += 2;
                    return Ok(());
                }
                out.push(c);
                continue;
            }
            if c == '\n' && !triple {
                self.pos -= 1;
                return Err(self.error("closing quote before end of line"));
            }
            if c != '\\' {
                out.push(c);
                continue;
            }
            let e = self.bump().ok_or_else(|| self.error("escape sequence"))?;
            if raw {
                out.push('\\');
                out.push(e);
                continue;
            }
            match e {
                '\n' => {}
                '\\' | '\'' | '"' => out.push(e),
                'a' => out.push('\x07'),
                'b' => out.push('\x08'),
                'f' => out.push('\x0c'),
                'n' => out.push('\n'),
                'r' => out.push('\r'),
                't' => out.push('\t'),
                'v' => out.push('\x0b'),
                '0'..='7' => {
                    let mut code = e.to_digit(8).unwrap();
                    for _ in 0..2 {
                        match self.peek().and_then(|d| d.to_digit(8)) {
                            Some(d) => {
                                code = code * 8 + d;
                                self.bump();
                            }
                            None => break,
                        }
                    }
                    out.push(char::from_u32(code).unwrap_or('\u{fffd}'));
                }
                'x' => {
                    let code = self.hex_digits(2)?;
                    out.push(char::from_u32(code).unwrap_or('\u{fffd}'));
                }
                'u' | 'U' => {
                    let code = self.hex_digits(if e == 'u' { 4 } else { 8 })?;
                    out.push(self.decode_code_point(code)?);
                }
                other => {
                    out.push('\\');
                    out.push(other);
                }
            }
        }
    }

    fn hex_digits(&mut self, n: usize) -> Result<u32, SyntaxError> {
        let digits = self.rest().get(..n).filter(|d| d.chars().all(|c| c.is_ascii_hexdigit()));
        match digits {
            Some(d) => {
                let code = u32::from_str_radix(d, 16).map_err(|_| self.error("hex digits"))?;
                self.pos += n;
                Ok(code)
            }
            None => Err(self.error(&format!("{n} hex digits"))),
        }
    }

    /// Combines `😀`-style surrogate pairs; lone surrogates become U+FFFD.
    fn decode_code_point(&mut self, code: u32) -> Result<char, SyntaxError> {
        if (0xD800..0xDC00).contains(&code) && self.rest().starts_with("\\u") {
            let save = self.pos;
            self.pos += 2;
            if let Ok(low) = self.hex_digits(4) {
                if (0xDC00..0xE000).contains(&low) {
                    let combined = 0x10000 + ((code - 0xD800) << 10) + (low - 0xDC00);
                    return Ok(char::from_u32(combined).unwrap_or('\u{fffd}'));
                }
            }
            self.pos = save;
        }
        match char::from_u32(code) {
            Some(c) => Ok(c),
            None if code <= 0x10FFFF => Ok('\u{fffd}'),
            None => Err(self.error("a valid code point")),
        }
    }

    fn number(&mut self, negative: bool) -> Result<LiteralValue, SyntaxError> {
        let start = self.pos;
        let rest = self.rest();
        let radix = match rest.get(..2).map(|p| p.to_ascii_lowercase()) {
            Some(p) if p == "0x" => Some(16),
            Some(p) if p == "0o" => Some(8),
            Some(p) if p == "0b" => Some(2),
            _ => None,
        };
        if let Some(radix) = radix {
            self.pos += 2;
            let len = self.rest().find(|c: char| !(c.is_digit(radix) || c == '_')).unwrap_or(self.rest().len());
            let digits: String = self.rest()[..len].chars().filter(|&c| c != '_').collect();
            self.pos += len;
            return self.integer(&digits, radix, negative, start);
        }

        let bytes = rest.as_bytes();
        let mut i = 0;
        let mut is_float = false;
        let digits = |i: &mut usize| {
            while *i < bytes.len() && (bytes[*i].is_ascii_digit() || bytes[*i] == b'_') {
                *i += 1;
            }
        };
        digits(&mut i);
        if i < bytes.len() && bytes[i] == b'.' {
            is_float = true;
            i += 1;
            digits(&mut i);
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                is_float = true;
                i = j;
                digits(&mut i);
            }
        }
        let text: String = rest[..i].chars().filter(|&c| c != '_').collect();
        if text.is_empty() || text == "." {
            return Err(self.error("a number"));
        }
        self.pos += i;
        if is_float {
            let x: f64 = text.parse().map_err(|_| SyntaxError { position: start, expected: "a float".into() })?;
            Ok(LiteralValue::Float(if negative { -x } else { x }))
        } else {
            self.integer(&text, 10, negative, start)
        }
    }

    fn integer(&self, digits: &str, radix: u32, negative: bool, start: usize) -> Result<LiteralValue, SyntaxError> {
        let err = || SyntaxError { position: start, expected: "a 64-bit integer".into() };
        let magnitude = i128::from_str_radix(digits, radix).map_err(|_| err())?;
        let value = if negative { -magnitude } else { magnitude };
        i64::try_from(value).map(LiteralValue::Int).map_err(|_| err())
    }
}
