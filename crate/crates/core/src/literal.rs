//! Bracket- and quote-aware scanning of subject-language literal text.
//!
//! Argument and output literals travel through the engine as source text;
//! only the harness evaluates them. These helpers cover the little structure
//! the engine needs: top-level comma splitting, matching brackets, whitespace
//! canonicalization and a coarse value-kind guess.

use crate::error::{Error, Result};
use crate::model::ValueKind;

/// Byte-level scanner state over a literal text.
struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

/// One lexical piece produced by [`Scanner`].
enum Piece {
    /// A complete quoted string literal.
    Str,
    Open(u8),
    Close(u8),
    Comma,
    Whitespace,
    Other,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            bytes: text.as_bytes(),
            pos: 0,
        }
    }

    /// Advances past one piece, returning it with its start offset.
    fn next_piece(&mut self) -> Option<Result<(usize, Piece)>> {
        let start = self.pos;
        let b = *self.bytes.get(self.pos)?;
        let piece = match b {
            b'\'' | b'"' => match self.skip_string(b) {
                Ok(()) => return Some(Ok((start, Piece::Str))),
                Err(e) => return Some(Err(e)),
            },
            b'(' | b'[' | b'{' => Piece::Open(b),
            b')' | b']' | b'}' => Piece::Close(b),
            b',' => Piece::Comma,
            b if b.is_ascii_whitespace() => Piece::Whitespace,
            _ => Piece::Other,
        };
        self.pos += 1;
        while self.pos < self.bytes.len() && (self.bytes[self.pos] & 0xC0) == 0x80 {
            self.pos += 1;
        }
        Some(Ok((start, piece)))
    }

    fn skip_string(&mut self, quote: u8) -> Result<()> {
        let triple = self.bytes[self.pos..].starts_with(&[quote, quote, quote]);
        let width = if triple { 3 } else { 1 };
        let start = self.pos;
        self.pos += width;
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'\\' {
                self.pos += 2;
                continue;
            }
            if b == quote && (!triple || self.bytes[self.pos..].starts_with(&[quote, quote, quote])) {
                self.pos += width;
                return Ok(());
            }
            if b == b'\n' && !triple {
                break;
            }
            self.pos += 1;
        }
        Err(Error::Parse(format!(
            "unterminated string literal starting at byte {start}"
        )))
    }
}

fn closer_for(open: u8) -> u8 {
    match open {
        b'(' => b')',
        b'[' => b']',
        _ => b'}',
    }
}

/// Splits `text` on commas that sit outside every bracket and string.
///
/// Pieces are trimmed; a single trailing empty piece (from `f(1,)`) is
/// dropped, and an all-whitespace input yields no pieces.
pub fn split_top_level(text: &str) -> Result<Vec<String>> {
    let mut scanner = Scanner::new(text);
    let mut stack: Vec<u8> = Vec::new();
    let mut pieces = Vec::new();
    let mut piece_start = 0;
    while let Some(item) = scanner.next_piece() {
        let (at, piece) = item?;
        match piece {
            Piece::Open(b) => stack.push(closer_for(b)),
            Piece::Close(b) => {
                if stack.pop() != Some(b) {
                    return Err(Error::Parse(format!(
                        "unbalanced `{}` at byte {at}",
                        b as char
                    )));
                }
            }
            Piece::Comma if stack.is_empty() => {
                pieces.push(text[piece_start..at].trim().to_string());
                piece_start = at + 1;
            }
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(Error::Parse("unclosed bracket".into()));
    }
    let last = text[piece_start..].trim();
    if !last.is_empty() || !pieces.is_empty() {
        pieces.push(last.to_string());
    }
    if pieces.last().is_some_and(|p| p.is_empty()) && pieces.len() > 1 {
        pieces.pop();
    }
    if pieces.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse(format!("empty argument in `{text}`")));
    }
    Ok(pieces)
}

/// Returns the byte index of the bracket closing the one at `open_at`.
pub fn matching_close(text: &str, open_at: usize) -> Result<usize> {
    let mut scanner = Scanner::new(text);
    scanner.pos = open_at;
    let mut stack: Vec<u8> = Vec::new();
    while let Some(item) = scanner.next_piece() {
        let (at, piece) = item?;
        match piece {
            Piece::Open(b) => stack.push(closer_for(b)),
            Piece::Close(b) => {
                if stack.pop() != Some(b) {
                    return Err(Error::Parse(format!(
                        "unbalanced `{}` at byte {at}",
                        b as char
                    )));
                }
                if stack.is_empty() {
                    return Ok(at);
                }
            }
            _ if stack.is_empty() => {
                return Err(Error::Parse(format!("no bracket at byte {open_at}")));
            }
            _ => {}
        }
    }
    Err(Error::Parse("unclosed bracket".into()))
}

/// Removes every whitespace byte that lies outside a string literal.
///
/// Fails open: text with an unterminated string is returned trimmed.
pub fn canonical_literal(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut scanner = Scanner::new(text);
    while let Some(item) = scanner.next_piece() {
        match item {
            Ok((start, Piece::Str)) => out.push_str(&text[start..scanner.pos]),
            Ok((_, Piece::Whitespace)) => {}
            Ok((start, _)) => out.push_str(&text[start..scanner.pos]),
            Err(_) => return text.trim().to_string(),
        }
    }
    out
}

/// True when the literal contains a float token outside string literals.
pub fn contains_float(text: &str) -> bool {
    let mut scanner = Scanner::new(text);
    let mut token = String::new();
    let mut tokens = Vec::new();
    while let Some(item) = scanner.next_piece() {
        match item {
            Ok((start, Piece::Other)) => {
                let c = text.as_bytes()[start];
                if c.is_ascii_alphanumeric() || c == b'.' || c == b'_' {
                    token.push(c as char);
                    continue;
                }
                // exponent sign stays inside the number token
                if (c == b'-' || c == b'+')
                    && token.ends_with(['e', 'E'])
                    && token.starts_with(|ch: char| ch.is_ascii_digit())
                {
                    token.push(c as char);
                    continue;
                }
                tokens.push(std::mem::take(&mut token));
            }
            Ok(_) => tokens.push(std::mem::take(&mut token)),
            Err(_) => return false,
        }
    }
    tokens.push(token);
    tokens.iter().any(|t| is_float_token(t))
}

fn is_float_token(token: &str) -> bool {
    if matches!(token, "inf" | "nan" | "float") {
        return true;
    }
    let first = match token.chars().next() {
        Some(c) => c,
        None => return false,
    };
    let numeric_start = first.is_ascii_digit()
        || (first == '.' && token[1..].starts_with(|c: char| c.is_ascii_digit()));
    if !numeric_start {
        return false;
    }
    let lower = token.to_ascii_lowercase();
    if lower.starts_with("0x") || lower.starts_with("0o") || lower.starts_with("0b") {
        return false;
    }
    lower.contains('.') || lower.contains('e')
}

/// Coarse kind of a canonical value text.
pub fn infer_kind(text: &str) -> ValueKind {
    let t = text.trim();
    match t {
        "None" => return ValueKind::None,
        "True" | "False" => return ValueKind::Scalar,
        "set()" => return ValueKind::Set,
        _ => {}
    }
    if t.starts_with("frozenset(") {
        return ValueKind::Set;
    }
    match t.as_bytes().first() {
        Some(b'[') | Some(b'(') => ValueKind::Sequence,
        Some(b'{') => {
            if t == "{}" || has_top_level_colon(t) {
                ValueKind::Mapping
            } else {
                ValueKind::Set
            }
        }
        Some(b'\'') | Some(b'"') => ValueKind::Scalar,
        Some(c) if c.is_ascii_digit() || *c == b'-' || *c == b'.' => ValueKind::Scalar,
        Some(b'b') | Some(b'r') | Some(b'f') | Some(b'u')
            if t.len() > 1 && matches!(t.as_bytes()[1], b'\'' | b'"') =>
        {
            ValueKind::Scalar
        }
        _ if t == "inf" || t == "nan" => ValueKind::Scalar,
        _ => ValueKind::Other,
    }
}

fn has_top_level_colon(text: &str) -> bool {
    let inner = &text[1..text.len().saturating_sub(1)];
    let mut scanner = Scanner::new(inner);
    let mut depth = 0usize;
    while let Some(item) = scanner.next_piece() {
        match item {
            Ok((_, Piece::Open(_))) => depth += 1,
            Ok((_, Piece::Close(_))) => depth = depth.saturating_sub(1),
            Ok((at, Piece::Other)) if depth == 0 && inner.as_bytes()[at] == b':' => return true,
            Ok(_) => {}
            Err(_) => return false,
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_respecting_brackets_and_quotes() {
        let parts = split_top_level("[1, (2, 3)], 'a,b'").unwrap();
        assert_eq!(parts, vec!["[1, (2, 3)]", "'a,b'"]);
        let parts = split_top_level(r#"{"k": [1, 2]}, "x\", y", 3"#).unwrap();
        assert_eq!(parts, vec![r#"{"k": [1, 2]}"#, r#""x\", y""#, "3"]);
    }

    #[test]
    fn split_edge_cases() {
        assert!(split_top_level("").unwrap().is_empty());
        assert!(split_top_level("   ").unwrap().is_empty());
        assert_eq!(split_top_level("1,").unwrap(), vec!["1"]);
        assert_eq!(split_top_level("'''a, 'b' '''").unwrap(), vec!["'''a, 'b' '''"]);
        assert!(split_top_level("[1, 2").is_err());
        assert!(split_top_level("(1]").is_err());
        assert!(split_top_level("'abc").is_err());
        assert!(split_top_level("1,,2").is_err());
    }

    #[test]
    fn matching_close_finds_outer_bracket() {
        let t = "f([1, ')'], 2) trailing";
        assert_eq!(matching_close(t, 1).unwrap(), 13);
        assert!(matching_close("f(1", 1).is_err());
    }

    #[test]
    fn canonical_literal_keeps_string_whitespace() {
        assert_eq!(canonical_literal("[ 1 , 2 ]"), "[1,2]");
        assert_eq!(canonical_literal("'a b' , \"c  d\""), "'a b',\"c  d\"");
        assert_eq!(canonical_literal("é , ü"), "é,ü");
    }

    #[test]
    fn float_detection() {
        assert!(contains_float("0.3"));
        assert!(contains_float("[1, 2.5]"));
        assert!(contains_float("1e-7"));
        assert!(contains_float("float('inf')"));
        assert!(!contains_float("'0.3'"));
        assert!(!contains_float("[1, 2, 3]"));
        assert!(!contains_float("0x1e"));
    }

    #[test]
    fn kind_inference() {
        assert_eq!(infer_kind("{1, 2, 3}"), ValueKind::Set);
        assert_eq!(infer_kind("{'a': 2, 'b': 1}"), ValueKind::Mapping);
        assert_eq!(infer_kind("{}"), ValueKind::Mapping);
        assert_eq!(infer_kind("set()"), ValueKind::Set);
        assert_eq!(infer_kind("[1]"), ValueKind::Sequence);
        assert_eq!(infer_kind("None"), ValueKind::None);
        assert_eq!(infer_kind("-3"), ValueKind::Scalar);
        assert_eq!(infer_kind("'x'"), ValueKind::Scalar);
        assert_eq!(infer_kind("generator"), ValueKind::Other);
    }
}
