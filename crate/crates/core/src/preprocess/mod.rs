//! Tweet normalization and tokenization.
//!
//! `normalize` rewrites a tweet in this order:
//!
//! 1. words that already are replacement tokens are kept verbatim, which
//!    makes normalization idempotent;
//! 2. language policy: NFKC for Japanese, traditional to simplified
//!    Chinese for Chinese;
//! 3. URLs (`http://`, `https://`, `ftp://` or `www.` followed by
//!    non-space characters, trailing `.,!?;:'")]` excluded) become `URL`;
//! 4. emoticons (see `data/emoticons.txt` and `data/emoticon_literals.txt`)
//!    become `EMOTICON`;
//! 5. emoji codepoints become `EMOJI_<uppercase hex>`;
//! 6. Latin letters are lowercased in every language.
//!
//! Replacement tokens are always separated from neighbouring text by a
//! space and runs of whitespace are collapsed, so a replacement token is
//! never split by the whitespace tokenizer.
//!
//! Emoji codepoint ranges (inclusive):
//!
//! | range             | block                                  |
//! |-------------------|----------------------------------------|
//! | U+231A..=U+231B   | watch, hourglass                       |
//! | U+23E9..=U+23FA   | media control symbols                  |
//! | U+2600..=U+27BF   | miscellaneous symbols, dingbats        |
//! | U+2B50..=U+2B55   | stars and circles                      |
//! | U+1F000..=U+1FAFF | all supplementary pictograph blocks    |
//!
//! Emoji presentation selectors (U+FE0E, U+FE0F), zero width joiners
//! (U+200D), the keycap combiner (U+20E3) and skin tone modifiers
//! (U+1F3FB..=U+1F3FF) are dropped.

mod chinese;
mod emoticon;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

pub use chinese::TradToSimp;
pub use emoticon::EmoticonMatcher;

use crate::corpus::{HasId, Lang, Polarity, TweetRecord};
use crate::error::{Error, Result};

pub const EMOJI_RANGES: &[(u32, u32)] = &[
    (0x231A, 0x231B),
    (0x23E9, 0x23FA),
    (0x2600, 0x27BF),
    (0x2B50, 0x2B55),
    (0x1F000, 0x1FAFF),
];

const DROPPED: &[(u32, u32)] = &[(0x200D, 0x200D), (0x20E3, 0x20E3), (0xFE0E, 0xFE0F), (0x1F3FB, 0x1F3FF)];

fn in_ranges(c: char, ranges: &[(u32, u32)]) -> bool {
    let c = c as u32;
    ranges.iter().any(|&(lo, hi)| (lo..=hi).contains(&c))
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?i)(?:(?:https?|ftp)://|www\.)[^\s]*[^\s.,!?;:'")\]]"#).expect("url regex")
    })
}

/// Script handling applied on top of the language-independent rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScriptPolicy {
    pub nfkc: bool,
    pub traditional_to_simplified: bool,
}

impl ScriptPolicy {
    pub fn default_for(lang: &Lang) -> Self {
        match lang.as_str() {
            "ja" => ScriptPolicy {
                nfkc: true,
                traditional_to_simplified: false,
            },
            "zh" => ScriptPolicy {
                nfkc: false,
                traditional_to_simplified: true,
            },
            _ => ScriptPolicy::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NormalizationRuleSet {
    emoji_token_prefix: String,
    emoticon_token: String,
    url_token: String,
    policies: BTreeMap<Lang, ScriptPolicy>,
    emoticons: EmoticonMatcher,
    trad_to_simp: TradToSimp,
}

impl NormalizationRuleSet {
    /// Shipped patterns and tables with the default policy for each language.
    pub fn for_languages<'a>(langs: impl IntoIterator<Item = &'a Lang>) -> Self {
        let policies = langs
            .into_iter()
            .map(|l| (l.clone(), ScriptPolicy::default_for(l)))
            .collect();
        NormalizationRuleSet {
            emoji_token_prefix: "EMOJI_".into(),
            emoticon_token: "EMOTICON".into(),
            url_token: "URL".into(),
            policies,
            emoticons: EmoticonMatcher::default(),
            trad_to_simp: chinese::default_table(),
        }
    }

    pub fn with_tokens(mut self, emoji_prefix: &str, emoticon: &str, url: &str) -> Result<Self> {
        for t in [emoji_prefix, emoticon, url] {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!("replacement token {t:?} must be non-empty without whitespace")));
            }
        }
        self.emoji_token_prefix = emoji_prefix.into();
        self.emoticon_token = emoticon.into();
        self.url_token = url.into();
        Ok(self)
    }

    pub fn with_emoticons(mut self, matcher: EmoticonMatcher) -> Self {
        self.emoticons = matcher;
        self
    }

    pub fn with_trad_to_simp(mut self, table: TradToSimp) -> Self {
        self.trad_to_simp = table;
        self
    }

    pub fn with_policy(mut self, lang: Lang, policy: ScriptPolicy) -> Self {
        self.policies.insert(lang, policy);
        self
    }

    pub fn policy(&self, lang: &Lang) -> ScriptPolicy {
        self.policies
            .get(lang)
            .copied()
            .unwrap_or_else(|| ScriptPolicy::default_for(lang))
    }

    pub fn emoji_token(&self, c: char) -> String {
        format!("{}{:04X}", self.emoji_token_prefix, c as u32)
    }

    fn is_replacement_token(&self, word: &str) -> bool {
        if word == self.url_token || word == self.emoticon_token {
            return true;
        }
        word.strip_prefix(&self.emoji_token_prefix).is_some_and(|hex| {
            (4..=6).contains(&hex.len()) && hex.chars().all(|c| c.is_ascii_digit() || ('A'..='F').contains(&c))
        })
    }

    /// A short description of every knob that changes normalization output.
    pub fn fingerprint_source(&self) -> String {
        let policies: Vec<String> = self
            .policies
            .iter()
            .map(|(l, p)| format!("{l}:{}{}", p.nfkc as u8, p.traditional_to_simplified as u8))
            .collect();
        format!(
            "{}|{}|{}|{}|{:?}|t2s={}",
            self.emoji_token_prefix,
            self.emoticon_token,
            self.url_token,
            policies.join(","),
            self.emoticons,
            self.trad_to_simp.len()
        )
    }
}

enum Segment {
    Text(String),
    Token(String),
}

/// Normalizes one tweet. Total on valid UTF-8.
pub fn normalize(text: &str, lang: &Lang, rules: &NormalizationRuleSet) -> String {
    let policy = rules.policy(lang);

    let mut segments: Vec<Segment> = Vec::new();
    let mut pending: Vec<&str> = Vec::new();
    for word in text.split_whitespace() {
        if rules.is_replacement_token(word) {
            if !pending.is_empty() {
                segments.push(Segment::Text(pending.join(" ")));
                pending.clear();
            }
            segments.push(Segment::Token(word.to_string()));
        } else {
            pending.push(word);
        }
    }
    if !pending.is_empty() {
        segments.push(Segment::Text(pending.join(" ")));
    }

    let mut out = String::with_capacity(text.len());
    for seg in segments {
        match seg {
            Segment::Token(t) => push_word(&mut out, &t),
            Segment::Text(t) => {
                let mut t = if policy.nfkc { t.nfkc().collect::<String>() } else { t };
                if policy.traditional_to_simplified {
                    t = rules.trad_to_simp.convert(&t);
                }
                normalize_text(&t, rules, &mut out);
            }
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn normalize_text(text: &str, rules: &NormalizationRuleSet, out: &mut String) {
    let mut last = 0;
    for m in url_regex().find_iter(text) {
        normalize_emoticons(&text[last..m.start()], rules, out);
        push_word(out, &rules.url_token);
        last = m.end();
    }
    normalize_emoticons(&text[last..], rules, out);
}

fn normalize_emoticons(text: &str, rules: &NormalizationRuleSet, out: &mut String) {
    let mut last = 0;
    for (s, e) in rules.emoticons.find_all(text) {
        normalize_chars(&text[last..s], rules, out);
        push_word(out, &rules.emoticon_token);
        last = e;
    }
    normalize_chars(&text[last..], rules, out);
}

fn normalize_chars(text: &str, rules: &NormalizationRuleSet, out: &mut String) {
    for c in text.chars() {
        if in_ranges(c, DROPPED) {
            continue;
        }
        if in_ranges(c, EMOJI_RANGES) {
            push_word(out, &rules.emoji_token(c));
        } else {
            out.push(lower_latin(c));
        }
    }
}

fn lower_latin(c: char) -> char {
    let latin = c.is_ascii_uppercase() || ('\u{C0}'..='\u{24F}').contains(&c) || ('\u{FF21}'..='\u{FF3A}').contains(&c);
    if !latin {
        return c;
    }
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn push_word(out: &mut String, word: &str) {
    out.push(' ');
    out.push_str(word);
    out.push(' ');
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizeMode {
    Whitespace,
    Pretokenized,
}

impl FromStr for TokenizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" => Ok(TokenizeMode::Whitespace),
            "pretokenized" => Ok(TokenizeMode::Pretokenized),
            other => Err(Error::Config(format!("unknown tokenize mode {other:?}"))),
        }
    }
}

impl fmt::Display for TokenizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenizeMode::Whitespace => "whitespace",
            TokenizeMode::Pretokenized => "pretokenized",
        })
    }
}

/// Splits on Unicode whitespace, or passes externally produced tokens through.
pub fn tokenize(text: &str, pretokens: Option<&[String]>, mode: TokenizeMode) -> Result<Vec<String>> {
    match mode {
        TokenizeMode::Whitespace => Ok(text.split_whitespace().map(str::to_string).collect()),
        TokenizeMode::Pretokenized => pretokens
            .map(<[String]>::to_vec)
            .ok_or_else(|| Error::Config("pretokenized mode requires a tokens field".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedTweet {
    pub id: String,
    pub lang: Lang,
    pub label: Polarity,
    pub tokens: Vec<String>,
}

impl TokenizedTweet {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl HasId for TokenizedTweet {
    fn id(&self) -> &str {
        &self.id
    }

    fn label(&self) -> Polarity {
        self.label
    }
}

/// Normalizes then tokenizes a record. In pretokenized mode each incoming
/// token is normalized separately and may expand into several tokens (or
/// vanish).
pub fn preprocess_record(record: &TweetRecord, rules: &NormalizationRuleSet, mode: TokenizeMode) -> Result<TokenizedTweet> {
    let tokens = match mode {
        TokenizeMode::Whitespace => tokenize(&normalize(&record.text, &record.lang, rules), None, mode)?,
        TokenizeMode::Pretokenized => tokenize("", record.tokens.as_deref(), mode)?
            .iter()
            .flat_map(|t| {
                normalize(t, &record.lang, rules)
                    .split_whitespace()
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            })
            .collect(),
    };
    if tokens.is_empty() {
        return Err(Error::Dropped { id: record.id.clone() });
    }
    Ok(TokenizedTweet {
        id: record.id.clone(),
        lang: record.lang.clone(),
        label: record.label,
        tokens,
    })
}

/// Outcome of preprocessing a whole corpus.
#[derive(Debug, Default)]
pub struct PreprocessedCorpus {
    pub tweets: Vec<TokenizedTweet>,
    pub dropped: Vec<String>,
}

pub fn preprocess_corpus(records: &[TweetRecord], rules: &NormalizationRuleSet, mode: TokenizeMode) -> Result<PreprocessedCorpus> {
    let mut out = PreprocessedCorpus::default();
    for r in records {
        match preprocess_record(r, rules, mode) {
            Ok(t) => out.tweets.push(t),
            Err(Error::Dropped { id }) => out.dropped.push(id),
            Err(e) => return Err(e),
        }
    }
    if !out.dropped.is_empty() {
        log::warn!("dropped {} records that were empty after normalization", out.dropped.len());
    }
    Ok(out)
}
