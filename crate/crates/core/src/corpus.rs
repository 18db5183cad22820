//! Corpus ingestion, the three-way label schema, and deterministic
//! fold / dev splitting.
//!
//! Two on-disk formats are accepted:
//!
//! * JSON lines, one object per line:
//!   `{"id": "t1", "lang": "en", "text": "...", "tokens": ["..."], "label": "positive"}`.
//!   `tokens` is optional; `text` may be empty when `tokens` is present.
//! * TSV with columns `id, lang, label, text` (the text column keeps any
//!   further tabs). A first line starting with `id\t` is treated as a header.
//!
//! Labels are matched case-insensitively against these aliases:
//!
//! | polarity | code | accepted spellings               |
//! |----------|------|----------------------------------|
//! | positive | 0    | `positive`, `pos`, `0`           |
//! | neutral  | 1    | `neutral`, `neu`, `neut`, `1`    |
//! | negative | 2    | `negative`, `neg`, `2`           |

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, SeededRng};

/// Language code such as `en`, `ja`, `zh`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lang(String);

impl Lang {
    pub fn new(code: &str) -> Self {
        Lang(code.trim().to_ascii_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Lang {
    fn from(s: &str) -> Self {
        Lang::new(s)
    }
}

/// The closed set of language codes an experiment accepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageSet(BTreeSet<Lang>);

impl LanguageSet {
    pub fn new<I, L>(langs: I) -> Self
    where
        I: IntoIterator<Item = L>,
        L: Into<Lang>,
    {
        LanguageSet(langs.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, lang: &Lang) -> bool {
        self.0.contains(lang)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Lang> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for LanguageSet {
    fn default() -> Self {
        LanguageSet::new(["en", "ja", "zh"])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive = 0,
    Neutral = 1,
    Negative = 2,
}

impl Polarity {
    pub const ALL: [Polarity; 3] = [Polarity::Positive, Polarity::Neutral, Polarity::Negative];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Polarity> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Neutral => "neutral",
            Polarity::Negative => "negative",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "0" => Ok(Polarity::Positive),
            "neutral" | "neu" | "neut" | "1" => Ok(Polarity::Neutral),
            "negative" | "neg" | "2" => Ok(Polarity::Negative),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub lang: Lang,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    pub label: Polarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::Config(format!("unknown corpus format {other:?}"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::Jsonl => "jsonl",
            CorpusFormat::Tsv => "tsv",
        })
    }
}

impl CorpusFormat {
    /// Guesses from the file extension, defaulting to JSON lines.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Str(String),
    Int(i64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawLabel {
    Str(String),
    Int(i64),
}

#[derive(Deserialize)]
struct RawRecord {
    id: RawId,
    lang: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    tokens: Option<Vec<String>>,
    label: RawLabel,
}

/// Reads a corpus file, returning records in file order.
pub fn load_corpus(path: &Path, format: CorpusFormat, langs: &LanguageSet) -> Result<Vec<TweetRecord>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&content, path, format, langs)
}

pub fn parse_corpus(content: &str, path: &Path, format: CorpusFormat, langs: &LanguageSet) -> Result<Vec<TweetRecord>> {
    let mut records = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw = match format {
            CorpusFormat::Jsonl => serde_json::from_str::<RawRecord>(line)
                .map_err(|e| Error::parse(path, line_no, e.to_string()))?,
            CorpusFormat::Tsv => {
                if idx == 0 && line.starts_with("id\t") {
                    continue;
                }
                let cols: Vec<&str> = line.splitn(4, '\t').collect();
                if cols.len() != 4 {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("expected 4 tab-separated columns, found {}", cols.len()),
                    ));
                }
                RawRecord {
                    id: RawId::Str(cols[0].to_string()),
                    lang: cols[1].to_string(),
                    label: RawLabel::Str(cols[2].to_string()),
                    text: Some(cols[3].to_string()),
                    tokens: None,
                }
            }
        };
        records.push(validate(raw, path, line_no, langs)?);
    }
    Ok(records)
}

fn validate(raw: RawRecord, path: &Path, line: usize, langs: &LanguageSet) -> Result<TweetRecord> {
    let label = match raw.label {
        RawLabel::Str(s) => s.parse::<Polarity>(),
        RawLabel::Int(i) => usize::try_from(i)
            .ok()
            .and_then(Polarity::from_code)
            .ok_or_else(|| format!("unknown label code {i}")),
    }
    .map_err(|m| Error::schema(path, line, m))?;
    let lang = Lang::new(&raw.lang);
    if !langs.contains(&lang) {
        return Err(Error::schema(path, line, format!("language {lang:?} is not configured")));
    }
    let id = match raw.id {
        RawId::Str(s) => s,
        RawId::Int(i) => i.to_string(),
    };
    let text = raw.text.unwrap_or_default();
    let has_tokens = raw.tokens.as_ref().is_some_and(|t| !t.is_empty());
    if text.is_empty() && !has_tokens {
        return Err(Error::schema(path, line, format!("record {id} has neither text nor tokens")));
    }
    Ok(TweetRecord {
        id,
        lang,
        text,
        tokens: raw.tokens,
        label,
    })
}

/// Fold assignment for k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignments.get(id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignments.values() {
            sizes[f] += 1;
        }
        sizes
    }

    /// `(train, test)` index lists into `records` for fold `fold`.
    pub fn split_indices<T: HasId>(&self, records: &[T], fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if self.fold_of(r.id()) == Some(fold) {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

pub trait HasId {
    fn id(&self) -> &str;
    fn label(&self) -> Polarity;
}

impl HasId for TweetRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn label(&self) -> Polarity {
        self.label
    }
}

/// Partitions records into `k` folds whose sizes differ by at most one.
///
/// With `stratify`, records are grouped by label, each group is shuffled,
/// and the groups are dealt round-robin in label order, so every fold holds
/// `floor` or `ceil` of each label's proportional share.
pub fn make_folds<T: HasId>(records: &[T], k: usize, seed: u64, stratify: bool) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::Argument("fold count must be positive".into()));
    }
    if k > records.len() {
        return Err(Error::Argument(format!(
            "{k} folds requested for {} records",
            records.len()
        )));
    }
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.id()) {
            return Err(Error::Argument(format!("duplicate record id {:?}", r.id())));
        }
    }

    let mut rng = SeededRng::new(seed, stream::FOLDS);
    let order: Vec<usize> = if stratify {
        let mut order = Vec::with_capacity(records.len());
        for label in Polarity::ALL {
            let mut group: Vec<usize> = (0..records.len())
                .filter(|&i| records[i].label() == label)
                .collect();
            rng.shuffle(&mut group);
            order.extend(group);
        }
        order
    } else {
        let mut order: Vec<usize> = (0..records.len()).collect();
        rng.shuffle(&mut order);
        order
    };

    let assignments = order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| (records[i].id().to_string(), pos % k))
        .collect();
    Ok(FoldPlan { k, seed, assignments })
}

/// Holds out `round(fraction * n)` ids as a dev set. Both halves keep the
/// input order.
pub fn split_dev<S: AsRef<str> + Clone>(ids: &[S], fraction: f64, seed: u64) -> Result<(Vec<S>, Vec<S>)> {
    if ids.is_empty() {
        return Err(Error::Argument("cannot split an empty id list".into()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Argument(format!("dev fraction {fraction} outside (0, 1)")));
    }
    let expected = fraction * ids.len() as f64;
    let dev_n = expected.round() as usize;
    if expected < 1.0 || dev_n >= ids.len() {
        return Err(Error::Argument(format!(
            "dev fraction {fraction} of {} ids leaves an empty side",
            ids.len()
        )));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    SeededRng::new(seed, stream::DEV_SPLIT).shuffle(&mut order);
    let mut is_dev = vec![false; ids.len()];
    for &i in &order[..dev_n] {
        is_dev[i] = true;
    }
    let (mut train, mut dev) = (Vec::new(), Vec::new());
    for (i, id) in ids.iter().enumerate() {
        if is_dev[i] {
            dev.push(id.clone());
        } else {
            train.push(id.clone());
        }
    }
    Ok((train, dev))
}
