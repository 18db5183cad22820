//! Monolingual embedding tables, per-corpus vocabulary matrices, and
//! deterministic vectors for out-of-vocabulary tokens.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::corpus::Lang;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::preprocess::TokenizedTweet;
use crate::rng::SeededRng;

#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    lang: Lang,
    dim: usize,
    words: Vec<String>,
    vectors: Vec<f64>,
    index: HashMap<String, usize>,
    frequency_rank: Option<HashMap<String, usize>>,
    duplicates: usize,
}

impl EmbeddingTable {
    /// Builds a table from `(word, vector)` pairs; a repeated word keeps the
    /// last vector and is counted in [`duplicates`](Self::duplicates).
    pub fn from_entries<I>(lang: Lang, dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if dim == 0 {
            return Err(Error::Argument("embedding dimension must be positive".into()));
        }
        let mut table = EmbeddingTable {
            lang,
            dim,
            words: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
            frequency_rank: None,
            duplicates: 0,
        };
        for (word, vec) in entries {
            if vec.len() != dim {
                return Err(Error::Argument(format!(
                    "vector for {word:?} has {} components, expected {dim}",
                    vec.len()
                )));
            }
            table.insert(word, &vec);
        }
        Ok(table)
    }

    fn insert(&mut self, word: String, vec: &[f64]) {
        match self.index.get(&word) {
            Some(&row) => {
                self.vectors[row * self.dim..(row + 1) * self.dim].copy_from_slice(vec);
                self.duplicates += 1;
            }
            None => {
                self.index.insert(word.clone(), self.words.len());
                self.words.push(word);
                self.vectors.extend_from_slice(vec);
            }
        }
    }

    pub fn lang(&self) -> &Lang {
        &self.lang
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    /// Words in file order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&row| &self.vectors[row * self.dim..(row + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn frequency_rank(&self) -> Option<&HashMap<String, usize>> {
        self.frequency_rank.as_ref()
    }

    pub fn set_frequency_rank(&mut self, ranks: HashMap<String, usize>) {
        self.frequency_rank = Some(ranks);
    }

    /// Writes the table in word2vec text format.
    pub fn write_word2vec(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.len(), self.dim));
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                out.push(' ');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Short content hash used in model fingerprints.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.lang.as_str().as_bytes());
        h.update((self.dim as u64).to_le_bytes());
        for (i, w) in self.words.iter().enumerate() {
            h.update(w.as_bytes());
            h.update([0u8]);
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                h.update(v.to_le_bytes());
            }
        }
        hex_prefix(&h.finalize()[..], 16)
    }
}

pub(crate) fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes.iter().take(n / 2).map(|b| format!("{b:02x}")).collect()
}

/// Loads a word2vec text file: a `V k` header, then `V` lines of a word
/// followed by `k` space-separated reals.
pub fn load_embedding_table(path: &Path, lang: Lang) -> Result<EmbeddingTable> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_word2vec(&content, path, lang)
}

pub fn parse_word2vec(content: &str, path: &Path, lang: Lang) -> Result<EmbeddingTable> {
    let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing \"vocab_size dim\" header"))?;
    let nums: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |s: &str| s.parse::<usize>().ok();
    let (vocab, dim) = match nums.as_slice() {
        [v, d] => match (parse_usize(v), parse_usize(d)) {
            (Some(v), Some(d)) if d > 0 => (v, d),
            _ => return Err(Error::parse(path, 1, format!("bad header {header:?}"))),
        },
        _ => return Err(Error::parse(path, 1, format!("bad header {header:?}"))),
    };

    let mut table = EmbeddingTable::from_entries(lang, dim, std::iter::empty())?;
    let mut rows = 0;
    let mut last_line = 1;
    for (idx, line) in lines {
        let line_no = idx + 1;
        last_line = line_no;
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-empty line has a first field");
        let values: Vec<f64> = parts
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(path, line_no, format!("bad number: {e}")))?;
        if values.len() != dim {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(path, line_no, "non-finite value"));
        }
        table.insert(word.to_string(), &values);
        rows += 1;
    }
    if rows != vocab {
        return Err(Error::parse(
            path,
            last_line,
            format!("header declares {vocab} rows, found {rows}"),
        ));
    }
    if table.duplicates > 0 {
        log::warn!("{}: {} duplicate words, last occurrence kept", path.display(), table.duplicates);
    }
    Ok(table)
}

/// Reads a sidecar `word\tcount` file.
pub fn load_frequency_tsv(path: &Path) -> Result<HashMap<String, u64>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut counts = HashMap::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, count) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, idx + 1, "expected word<TAB>count"))?;
        let count = count
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        counts.insert(word.to_string(), count);
    }
    Ok(counts)
}

/// Token counts over the tweets of one language.
pub fn corpus_counts<'a>(tweets: impl IntoIterator<Item = &'a TokenizedTweet>, lang: &Lang) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for t in tweets.into_iter().filter(|t| &t.lang == lang) {
        for tok in &t.tokens {
            *counts.entry(tok.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Ranks from counts: rank 1 is the most frequent word, ties broken
/// lexicographically.
pub fn ranks_from_counts(counts: &HashMap<String, u64>) -> HashMap<String, usize> {
    let mut words: Vec<(&String, u64)> = counts.iter().map(|(w, &c)| (w, c)).collect();
    words.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    words
        .into_iter()
        .enumerate()
        .map(|(i, (w, _))| (w.clone(), i + 1))
        .collect()
}

/// Checks that every table shares one dimensionality and returns it.
pub fn check_uniform_dim<'a>(tables: impl IntoIterator<Item = &'a EmbeddingTable>) -> Result<usize> {
    let mut dim = None;
    for t in tables {
        match dim {
            None => dim = Some((t.dim(), t.lang().clone())),
            Some((d, ref l)) if d != t.dim() => {
                return Err(Error::Config(format!(
                    "embedding dimension mismatch: {l} has {d}, {} has {}",
                    t.lang(),
                    t.dim()
                )))
            }
            _ => {}
        }
    }
    dim.map(|(d, _)| d)
        .ok_or_else(|| Error::Config("no embedding tables given".into()))
}

/// Random initialization for tokens missing from a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OovPolicy {
    pub seed: u64,
    /// Per-component bound; `None` means `0.5 / dim`.
    pub scale: Option<f64>,
}

impl OovPolicy {
    pub fn new(seed: u64) -> Self {
        OovPolicy { seed, scale: None }
    }

    pub fn bound(&self, dim: usize) -> f64 {
        self.scale.unwrap_or(0.5 / dim as f64)
    }

    /// Pure function of `(seed, lang, token)`: uniform in `[-bound, bound)^dim`.
    pub fn vector(&self, lang: &Lang, token: &str, dim: usize) -> Vec<f64> {
        let mut h = Sha256::new();
        h.update(b"xlsent-oov\0");
        h.update(self.seed.to_le_bytes());
        h.update(lang.as_str().as_bytes());
        h.update([0u8]);
        h.update(token.as_bytes());
        let mut key = [0u8; 32];
        key.copy_from_slice(&h.finalize()[..]);
        let mut rng = SeededRng::from_seed_bytes(key);
        let bound = self.bound(dim);
        (0..dim).map(|_| rng.uniform(-bound, bound)).collect()
    }
}

/// Memoizes OOV vectors so a token always maps to the same row.
#[derive(Debug, Clone)]
pub struct OovCache {
    policy: OovPolicy,
    cache: HashMap<(Lang, String), Vec<f64>>,
}

impl OovCache {
    pub fn new(policy: OovPolicy) -> Self {
        OovCache {
            policy,
            cache: HashMap::new(),
        }
    }

    pub fn policy(&self) -> OovPolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.cache.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cache.is_empty()
    }

    pub fn vector(&mut self, lang: &Lang, token: &str, dim: usize) -> &[f64] {
        let policy = self.policy;
        self.cache
            .entry((lang.clone(), token.to_string()))
            .or_insert_with(|| policy.vector(lang, token, dim))
    }
}

fn resolve<'a>(table: &'a EmbeddingTable, oov: &'a mut OovCache, token: &str) -> &'a [f64] {
    match table.get(token) {
        Some(v) => v,
        None => oov.vector(&table.lang, token, table.dim),
    }
}

/// Stacks the word vectors of a tweet, one row per token.
pub fn embed_tokens(tweet: &TokenizedTweet, table: &EmbeddingTable, oov: &mut OovCache) -> Result<Matrix> {
    if tweet.lang != table.lang {
        return Err(Error::Argument(format!(
            "tweet {} is {} but the table is {}",
            tweet.id, tweet.lang, table.lang
        )));
    }
    let mut data = Vec::with_capacity(tweet.len() * table.dim);
    for tok in &tweet.tokens {
        data.extend_from_slice(resolve(table, oov, tok));
    }
    Matrix::from_vec(tweet.len(), table.dim, data)
}

/// The stacked vectors of a corpus vocabulary for one language.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabularyMatrix {
    /// Language of the words.
    pub lang: Lang,
    /// Embedding space the rows live in; differs from `lang` after a
    /// translation matrix is applied.
    pub space: Lang,
    /// Lexicographically sorted.
    pub words: Vec<String>,
    pub matrix: Matrix,
}

impl VocabularyMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn row_of(&self, word: &str) -> Option<&[f64]> {
        self.words
            .binary_search_by(|w| w.as_str().cmp(word))
            .ok()
            .map(|i| self.matrix.row(i))
    }
}

/// Vocabulary matrix over the tokens of `table.lang` tweets; other
/// languages are skipped.
pub fn build_vocabulary_matrix<'a>(
    tweets: impl IntoIterator<Item = &'a TokenizedTweet>,
    table: &EmbeddingTable,
    oov: &mut OovCache,
) -> VocabularyMatrix {
    let words: BTreeSet<&str> = tweets
        .into_iter()
        .filter(|t| t.lang == table.lang)
        .flat_map(|t| t.tokens.iter().map(String::as_str))
        .collect();
    let mut data = Vec::with_capacity(words.len() * table.dim);
    for w in &words {
        data.extend_from_slice(resolve(table, oov, w));
    }
    VocabularyMatrix {
        lang: table.lang.clone(),
        space: table.lang.clone(),
        words: words.iter().map(|w| w.to_string()).collect(),
        matrix: Matrix::from_vec(words.len(), table.dim, data).expect("row data matches shape"),
    }
}
