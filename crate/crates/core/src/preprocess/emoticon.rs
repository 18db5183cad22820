use std::path::Path;

use regex::Regex;

use crate::error::{Error, Result};

pub const DEFAULT_PATTERNS: &str = include_str!("../../data/emoticons.txt");
pub const DEFAULT_LITERALS: &str = include_str!("../../data/emoticon_literals.txt");

/// Finds emoticons using literal exceptions first, then regular expressions.
#[derive(Debug, Clone)]
pub struct EmoticonMatcher {
    regex: Regex,
}

impl EmoticonMatcher {
    pub fn new(patterns: &str, literals: &str) -> Result<Self> {
        let mut lits: Vec<&str> = content_lines(literals).collect();
        lits.sort_by_key(|l| std::cmp::Reverse(l.chars().count()));
        let mut alternatives: Vec<String> = lits.iter().map(|l| regex::escape(l)).collect();
        for (i, p) in content_lines(patterns).enumerate() {
            Regex::new(p).map_err(|e| Error::Config(format!("emoticon pattern {}: {e}", i + 1)))?;
            alternatives.push(p.to_string());
        }
        if alternatives.is_empty() {
            return Err(Error::Config("emoticon pattern set is empty".into()));
        }
        let joined = alternatives
            .iter()
            .map(|a| format!("(?:{a})"))
            .collect::<Vec<_>>()
            .join("|");
        let regex = Regex::new(&joined).map_err(|e| Error::Config(format!("emoticon patterns: {e}")))?;
        Ok(EmoticonMatcher { regex })
    }

    pub fn from_files(patterns: &Path, literals: Option<&Path>) -> Result<Self> {
        let p = std::fs::read_to_string(patterns).map_err(|e| Error::io(patterns, e))?;
        let l = match literals {
            Some(path) => std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
            None => String::new(),
        };
        Self::new(&p, &l)
    }

    /// Byte ranges of accepted matches, left to right, non-overlapping.
    pub fn find_all(&self, text: &str) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < text.len() {
            let Some(m) = self.regex.find_at(text, pos) else {
                break;
            };
            if m.start() == m.end() {
                pos = next_boundary(text, m.end());
                continue;
            }
            if glued_to_word(text, m.start(), m.end()) {
                pos = next_boundary(text, m.start());
                continue;
            }
            out.push((m.start(), m.end()));
            pos = m.end();
        }
        out
    }
}

impl Default for EmoticonMatcher {
    fn default() -> Self {
        Self::new(DEFAULT_PATTERNS, DEFAULT_LITERALS).expect("shipped emoticon patterns compile")
    }
}

fn content_lines(src: &str) -> impl Iterator<Item = &str> {
    src.lines()
        .map(|l| l.trim_end_matches(['\r', '\n']))
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

fn next_boundary(text: &str, from: usize) -> usize {
    let mut i = from + 1;
    while i < text.len() && !text.is_char_boundary(i) {
        i += 1;
    }
    i
}

fn glued_to_word(text: &str, start: usize, end: usize) -> bool {
    let matched = &text[start..end];
    let first = matched.chars().next();
    let last = matched.chars().next_back();
    let before = text[..start].chars().next_back();
    let after = text[end..].chars().next();
    let alnum = |c: Option<char>| c.is_some_and(|c| c.is_ascii_alphanumeric());
    (alnum(first) && alnum(before)) || (alnum(last) && alnum(after))
}
