//! Feature vocabularies. A bigram is written `tok1␟tok2`; in the cumulative
//! scheme every n-gram is prefixed `lang␞` so equal strings from different
//! languages get different columns. Column ids follow first occurrence in
//! the training tweets.
//!
//! Dump format: a `feature-space v1` line, `scheme <name>`,
//! `columns <n>`, then one `<id>\t<ngram>` line per column.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::preprocess::TokenizedTweet;

pub const BIGRAM_JOINER: char = '\u{241F}';
pub const LANG_SEPARATOR: char = '\u{241E}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureScheme {
    PerLanguage,
    Cumulative,
}

impl fmt::Display for FeatureScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureScheme::PerLanguage => "per_language",
            FeatureScheme::Cumulative => "cumulative",
        })
    }
}

impl FromStr for FeatureScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_language" => Ok(FeatureScheme::PerLanguage),
            "cumulative" => Ok(FeatureScheme::Cumulative),
            _ => Err(Error::Config(format!("unknown feature scheme {s:?}"))),
        }
    }
}

/// Sorted, distinct active column ids; every value is implicitly 1.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseBinaryVector(Vec<u32>);

impl SparseBinaryVector {
    pub fn from_ids(mut ids: Vec<u32>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        SparseBinaryVector(ids)
    }

    pub fn ids(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpace {
    scheme: FeatureScheme,
    index: HashMap<String, u32>,
    names: Vec<String>,
}

impl FeatureSpace {
    /// One column for every unigram and bigram of the given tweets.
    pub fn build<'a>(tweets: impl IntoIterator<Item = &'a TokenizedTweet>, scheme: FeatureScheme) -> Self {
        let mut space = FeatureSpace {
            scheme,
            index: HashMap::new(),
            names: Vec::new(),
        };
        for tweet in tweets {
            for gram in space.ngrams(tweet) {
                if !space.index.contains_key(&gram) {
                    space.index.insert(gram.clone(), space.names.len() as u32);
                    space.names.push(gram);
                }
            }
        }
        space
    }

    pub fn scheme(&self) -> FeatureScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, gram: &str) -> Option<u32> {
        self.index.get(gram).copied()
    }

    /// The tweet's n-gram strings as this space names them.
    pub fn ngrams(&self, tweet: &TokenizedTweet) -> Vec<String> {
        let prefix = match self.scheme {
            FeatureScheme::PerLanguage => String::new(),
            FeatureScheme::Cumulative => format!("{}{LANG_SEPARATOR}", tweet.lang),
        };
        let toks = &tweet.tokens;
        let mut grams = Vec::with_capacity(2 * toks.len());
        for t in toks {
            grams.push(format!("{prefix}{t}"));
        }
        for pair in toks.windows(2) {
            grams.push(format!("{prefix}{}{BIGRAM_JOINER}{}", pair[0], pair[1]));
        }
        grams
    }

    /// Active known columns; unseen n-grams are ignored.
    pub fn vectorize(&self, tweet: &TokenizedTweet) -> SparseBinaryVector {
        SparseBinaryVector::from_ids(self.ngrams(tweet).iter().filter_map(|g| self.id(g)).collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("feature-space v1\nscheme {}\ncolumns {}\n", self.scheme, self.len());
        for (i, name) in self.names.iter().enumerate() {
            writeln!(out, "{i}\t{name}").unwrap();
        }
        out
    }
}
