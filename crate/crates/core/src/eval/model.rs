//! Training one model on a whole corpus, and predicting with it.

use std::collections::{BTreeMap, HashSet};

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::context::EmbeddingContext;
use super::{architecture, neural_shape, scoped_tweets, ExperimentData, LeakageAudit};
use crate::align::TranslationMatrix;
use crate::corpus::{split_dev, Lang, Polarity};
use crate::embeddings::hex_prefix;
use crate::error::{Error, Result};
use crate::nn::{self, Example, ModelFingerprints, Network, TrainedModel};
use crate::preprocess::{NormalizationRuleSet, TokenizedTweet};

/// A trained network with the translation matrices its inputs went
/// through (source language to pivot).
#[derive(Debug, Clone)]
pub struct FinalModel {
    pub model: TrainedModel,
    pub matrices: BTreeMap<Lang, TranslationMatrix>,
}

fn digest(parts: impl IntoIterator<Item = String>) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex_prefix(&h.finalize()[..], 16)
}

/// Fingerprints of the preprocessing, embedding and alignment inputs.
pub fn fingerprints(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    matrices: &BTreeMap<Lang, TranslationMatrix>,
) -> ModelFingerprints {
    let rules = NormalizationRuleSet::for_languages(cfg.languages.iter());
    let langs: Vec<&Lang> = cfg.languages.iter().filter(|l| data.tables.contains_key(*l)).collect();
    ModelFingerprints {
        preprocessing: digest([rules.fingerprint_source(), cfg.tokenize.to_string()]),
        embeddings: digest(
            langs
                .iter()
                .map(|l| format!("{l}:{}", data.tables[*l].fingerprint()))
                .chain([format!("oov {} {:?}", cfg.seed, cfg.oov_scale)]),
        ),
        alignment: digest(matrices.iter().map(|(l, m)| format!("{l}:{}", m.to_text()))),
    }
}

/// Trains a neural model on every in-scope tweet, holding out the dev
/// fraction for early stopping.
pub fn train_final(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<FinalModel> {
    cfg.validate()?;
    if !cfg.kind.is_neural() {
        return Err(Error::Config(format!("{} is not a neural model kind", cfg.kind)));
    }
    let (tweets, langs) = scoped_tweets(cfg, data)?;
    let (dim, max_len) = neural_shape(cfg, data, &tweets, &langs)?;
    let all: Vec<&TokenizedTweet> = tweets.iter().collect();
    let ids: Vec<&str> = all.iter().map(|t| t.id.as_str()).collect();
    let (_, dev_ids) = split_dev(&ids, cfg.neural.dev_fraction, cfg.seed)?;
    let dev_set: HashSet<&str> = dev_ids.into_iter().collect();

    let mut audit = LeakageAudit::new([]);
    let ctx = EmbeddingContext::build(cfg, data, &all, &langs, cfg.seed, dim, max_len, &mut audit)?;
    let example = |t: &TokenizedTweet| Example {
        input: ctx.embed(t),
        label: t.label,
    };
    let (dev, fit): (Vec<&TokenizedTweet>, Vec<&TokenizedTweet>) =
        all.iter().partition(|t| dev_set.contains(t.id.as_str()));
    let fit: Vec<Example> = fit.into_iter().map(example).collect();
    let dev: Vec<Example> = dev.into_iter().map(example).collect();

    let network = Network::initialized(architecture(cfg, dim, max_len), cfg.seed)?;
    let train_cfg = nn::TrainConfig {
        seed: cfg.seed,
        ..cfg.neural.train.clone()
    };
    let outcome = nn::train(network, &fit, &dev, &train_cfg)?;
    let matrices = ctx.into_maps();
    Ok(FinalModel {
        model: TrainedModel {
            network: outcome.network,
            train_config: train_cfg,
            fingerprints: fingerprints(cfg, data, &matrices),
            history: outcome.history,
        },
        matrices,
    })
}

/// Classifies `tweets` with `model`, embedding them through `matrices`.
/// Fails when the fingerprints of the current inputs differ from the
/// model's.
pub fn predict(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    model: &TrainedModel,
    matrices: &BTreeMap<Lang, TranslationMatrix>,
    tweets: &[TokenizedTweet],
) -> Result<Vec<(Polarity, [f64; 3])>> {
    let context = fingerprints(cfg, data, matrices);
    let arch = model.network.architecture();
    let max_len = match arch {
        nn::Architecture::Cnn(c) => c.max_len,
        nn::Architecture::Lstm(_) => cfg
            .neural
            .max_len
            .unwrap_or_else(|| tweets.iter().map(TokenizedTweet::len).max().unwrap_or(1)),
    };
    for t in tweets {
        if !data.tables.contains_key(&t.lang) {
            return Err(Error::Config(format!("tweet {}: no embeddings for {}", t.id, t.lang)));
        }
    }
    let ctx = EmbeddingContext::from_maps(cfg, data, matrices.clone(), arch.dim(), max_len);
    tweets.iter().map(|t| model.predict(&ctx.embed(t), &context)).collect()
}
