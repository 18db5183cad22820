//! Per-fold embedding lookup: each language's table, optionally mapped
//! into the pivot space, with the training vocabulary precomputed.

use std::collections::{BTreeMap, HashMap};

use super::config::{AlignmentMode, ExperimentConfig};
use super::{ExperimentData, LeakageAudit};
use crate::align::{
    apply_translation, fit_translation_matrix, resolve_pairs, select_pivot_pairs, FitOptions, PivotSelection,
    RankedSide, TranslationMatrix,
};
use crate::corpus::Lang;
use crate::embeddings::{build_vocabulary_matrix, corpus_counts, ranks_from_counts, OovCache, OovPolicy, VocabularyMatrix};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::PaddedTweetMatrix;
use crate::preprocess::TokenizedTweet;

pub(crate) struct EmbeddingContext<'a> {
    data: &'a ExperimentData,
    maps: BTreeMap<Lang, TranslationMatrix>,
    vocab: HashMap<Lang, VocabularyMatrix>,
    oov: OovPolicy,
    dim: usize,
    max_len: usize,
}

impl<'a> EmbeddingContext<'a> {
    /// Everything here is derived from `train`, the fold's training split.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        cfg: &ExperimentConfig,
        data: &'a ExperimentData,
        train: &[&TokenizedTweet],
        langs: &[Lang],
        fold_seed: u64,
        dim: usize,
        max_len: usize,
        audit: &mut LeakageAudit,
    ) -> Result<Self> {
        audit.consult(train.iter().map(|t| t.id.as_str()));
        let maps = match cfg.alignment {
            AlignmentMode::None => BTreeMap::new(),
            AlignmentMode::Matrix => {
                let mut maps = BTreeMap::new();
                for lang in langs.iter().filter(|l| **l != cfg.pivot) {
                    let m = data
                        .matrices
                        .get(lang)
                        .ok_or_else(|| Error::Config(format!("no translation matrix for {lang}")))?;
                    maps.insert(lang.clone(), m.clone());
                }
                maps
            }
            AlignmentMode::Refit => refit(cfg, data, train, langs, fold_seed)?,
        };
        let oov = OovPolicy {
            seed: cfg.seed,
            scale: cfg.oov_scale,
        };
        let mut cache = OovCache::new(oov);
        let mut vocab = HashMap::new();
        for lang in langs {
            let table = &data.tables[lang];
            let v = build_vocabulary_matrix(train.iter().copied(), table, &mut cache);
            let v = match maps.get(lang) {
                Some(w) => apply_translation(&v, w)?,
                None => v,
            };
            vocab.insert(lang.clone(), v);
        }
        Ok(EmbeddingContext {
            data,
            maps,
            vocab,
            oov,
            dim,
            max_len,
        })
    }

    /// Lookup with fixed maps and no precomputed vocabulary; embeds every
    /// token to the same vector `build` would.
    pub fn from_maps(
        cfg: &ExperimentConfig,
        data: &'a ExperimentData,
        maps: BTreeMap<Lang, TranslationMatrix>,
        dim: usize,
        max_len: usize,
    ) -> Self {
        EmbeddingContext {
            data,
            maps,
            vocab: HashMap::new(),
            oov: OovPolicy {
                seed: cfg.seed,
                scale: cfg.oov_scale,
            },
            dim,
            max_len,
        }
    }

    pub fn into_maps(self) -> BTreeMap<Lang, TranslationMatrix> {
        self.maps
    }

    fn vector(&self, lang: &Lang, token: &str) -> Vec<f64> {
        if let Some(row) = self.vocab.get(lang).and_then(|v| v.row_of(token)) {
            return row.to_vec();
        }
        let raw = match self.data.tables[lang].get(token) {
            Some(v) => v.to_vec(),
            None => self.oov.vector(lang, token, self.dim),
        };
        match self.maps.get(lang) {
            Some(w) => w.map_vector(&raw),
            None => raw,
        }
    }

    pub fn embed(&self, tweet: &TokenizedTweet) -> PaddedTweetMatrix {
        let n = tweet.len().min(self.max_len);
        let mut data = Vec::with_capacity(n * self.dim);
        for tok in &tweet.tokens[..n] {
            data.extend(self.vector(&tweet.lang, tok));
        }
        PaddedTweetMatrix::new(Matrix::from_vec(n, self.dim, data).expect("row data matches shape"), self.max_len)
    }
}

fn refit(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    train: &[&TokenizedTweet],
    langs: &[Lang],
    fold_seed: u64,
) -> Result<BTreeMap<Lang, TranslationMatrix>> {
    let pivot_table = data
        .tables
        .get(&cfg.pivot)
        .ok_or_else(|| Error::Config(format!("no embeddings for pivot language {}", cfg.pivot)))?;
    let mut maps = BTreeMap::new();
    for lang in langs.iter().filter(|l| **l != cfg.pivot) {
        let dict = data
            .dictionaries
            .get(lang)
            .ok_or_else(|| Error::Config(format!("no dictionary for {lang}")))?;
        let src_table = &data.tables[lang];
        let usable = dict.resolvable(src_table, pivot_table);
        let ranked = match cfg.rank_by {
            RankedSide::Target => &cfg.pivot,
            RankedSide::Source => lang,
        };
        let ranks = ranks_from_counts(&corpus_counts(train.iter().copied(), ranked));
        let set = select_pivot_pairs(
            &ranks,
            &usable,
            &PivotSelection {
                src_lang: lang.clone(),
                tgt_lang: cfg.pivot.clone(),
                side: cfg.rank_by,
                k: cfg.pivot_k,
                train_count: cfg.pivot_train,
                seed: fold_seed,
            },
        )?;
        let (x, z) = resolve_pairs(&set.train, src_table, pivot_table)?;
        let w = fit_translation_matrix(&x, &z, lang.clone(), cfg.pivot.clone(), &FitOptions::default())?;
        maps.insert(lang.clone(), w);
    }
    Ok(maps)
}
