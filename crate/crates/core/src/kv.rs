//! `key = value` lexer shared by ENVI headers and pipeline configs.
//!
//! Keys are compared after lower-casing and collapsing internal whitespace.
//! A value that opens a `{` without closing it continues over the following
//! lines until the matching `}`. Lines starting with `;` or `#` are comments.

use crate::error::{Error, Result};

/// One `key = value` entry as written in the source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    /// Key exactly as written (trimmed).
    pub key: String,
    /// Raw value text (trimmed); brace lists keep their braces and newlines.
    pub value: String,
}

impl Entry {
    pub fn normalized_key(&self) -> String {
        normalize_key(&self.key)
    }
}

pub fn normalize_key(key: &str) -> String {
    key.split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Split `text` into entries. Callers strip any magic first line themselves.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    let mut lines = text.lines().enumerate();
    while let Some((lineno, line)) = lines.next() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(';') || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(Error::Parse(format!(
                "line {}: expected `key = value`, found {:?}",
                lineno + 1,
                trimmed
            )));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        let mut value = value.trim().to_string();
        if value.starts_with('{') {
            while !value.contains('}') {
                match lines.next() {
                    Some((_, cont)) => {
                        value.push('\n');
                        value.push_str(cont.trim());
                    }
                    None => {
                        return Err(Error::Parse(format!(
                            "line {}: unterminated `{{` list for key {:?}",
                            lineno + 1,
                            key
                        )))
                    }
                }
            }
        }
        entries.push(Entry {
            key: key.to_string(),
            value,
        });
    }
    Ok(entries)
}

/// Strip the enclosing braces of a list value; `None` if `value` is not braced.
pub fn brace_inner(value: &str) -> Option<&str> {
    let v = value.trim();
    let inner = v.strip_prefix('{')?.strip_suffix('}')?;
    Some(inner.trim())
}

/// Parse a braced, comma-separated list of reals.
pub fn parse_real_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let inner = brace_inner(value)
        .ok_or_else(|| Error::Parse(format!("{key}: expected a `{{ ... }}` list")))?;
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| Error::Parse(format!("{key}: unparseable number {tok:?}")))
        })
        .collect()
}

/// Parse a braced list of free-text items.
pub fn parse_text_list(key: &str, value: &str) -> Result<Vec<String>> {
    let inner = brace_inner(value)
        .ok_or_else(|| Error::Parse(format!("{key}: expected a `{{ ... }}` list")))?;
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    Ok(inner.split(',').map(|s| s.trim().to_string()).collect())
}

/// Format reals as a brace list, wrapping every `per_line` items.
pub fn format_real_list(values: &[f64], per_line: usize) -> String {
    let mut out = String::from("{");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
            if per_line > 0 && i % per_line == 0 {
                out.push_str("\n ");
            } else {
                out.push(' ');
            }
        } else {
            out.push(' ');
        }
        out.push_str(&v.to_string());
    }
    out.push_str(" }");
    out
}
