//! k-fold cross-validation over the full pipeline.
//!
//! Every artifact a fold trains with (feature space, vocabulary matrices,
//! refit translation matrices, dev split) is built from that fold's
//! training split. Ids read while building them are recorded by a
//! [`LeakageAudit`] and checked against the held-out ids before the fold
//! is scored.

pub mod config;
mod context;
mod model;
pub mod report;

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;

use crate::align::{Dictionary, TranslationMatrix};
use crate::baselines::{train_nb, train_svm_ovo, DcdOptions, FeatureSpace};
use crate::corpus::{load_corpus, make_folds, split_dev, CorpusFormat, Lang, Polarity};
use crate::embeddings::{check_uniform_dim, load_embedding_table, EmbeddingTable};
use crate::error::{Error, Result};
use crate::nn::{self, Architecture, CnnConfig, Example, LstmConfig, Network};
use crate::preprocess::{preprocess_corpus, NormalizationRuleSet, TokenizedTweet};
use crate::rng::{stream, SeededRng};

pub use config::{AlignmentMode, ClassifierKind, DatasetScope, ExperimentConfig, NeuralSettings};
pub use model::{fingerprints, predict, train_final, FinalModel};
pub use report::{compare_runs, CVReport, Comparison, ComparisonRow, FoldResult, Tally};

use context::EmbeddingContext;

/// Inputs of an experiment, already loaded and tokenized.
#[derive(Debug, Clone, Default)]
pub struct ExperimentData {
    pub tweets: Vec<TokenizedTweet>,
    pub tables: BTreeMap<Lang, EmbeddingTable>,
    /// Source language to pivot-space matrices.
    pub matrices: BTreeMap<Lang, TranslationMatrix>,
    /// Source language to pivot-language dictionaries.
    pub dictionaries: BTreeMap<Lang, Dictionary>,
}

/// Records the ids consulted while building training artifacts.
#[derive(Debug)]
pub struct LeakageAudit {
    held_out: HashSet<String>,
    hits: Vec<String>,
}

impl LeakageAudit {
    pub fn new<'a>(held_out: impl IntoIterator<Item = &'a str>) -> Self {
        LeakageAudit {
            held_out: held_out.into_iter().map(str::to_string).collect(),
            hits: Vec::new(),
        }
    }

    pub fn consult<'a>(&mut self, ids: impl IntoIterator<Item = &'a str>) {
        for id in ids {
            if self.held_out.contains(id) {
                self.hits.push(id.to_string());
            }
        }
    }

    pub fn verify(&self) -> Result<()> {
        match self.hits.first() {
            None => Ok(()),
            Some(first) => Err(Error::Leakage {
                count: self.hits.len(),
                first: first.clone(),
            }),
        }
    }
}

/// Reads the corpus and every file the configuration names.
pub fn load_data(cfg: &ExperimentConfig) -> Result<ExperimentData> {
    let corpus = cfg
        .corpus
        .as_ref()
        .ok_or_else(|| Error::Config("no corpus given".into()))?;
    let format = cfg.format.unwrap_or_else(|| CorpusFormat::from_path(corpus));
    let records = load_corpus(corpus, format, &cfg.languages)?;
    let rules = NormalizationRuleSet::for_languages(cfg.languages.iter());
    let pre = preprocess_corpus(&records, &rules, cfg.tokenize)?;
    if !pre.dropped.is_empty() {
        log::warn!("{} records empty after normalization were dropped", pre.dropped.len());
    }
    let mut data = ExperimentData {
        tweets: pre.tweets,
        ..ExperimentData::default()
    };
    if cfg.kind.is_neural() {
        for (lang, path) in &cfg.embeddings {
            data.tables.insert(lang.clone(), load_embedding_table(path, lang.clone())?);
        }
        match cfg.alignment {
            AlignmentMode::Matrix => {
                for (lang, path) in &cfg.matrices {
                    data.matrices.insert(lang.clone(), TranslationMatrix::load(path)?);
                }
            }
            AlignmentMode::Refit => {
                for (lang, path) in &cfg.dictionaries {
                    data.dictionaries.insert(lang.clone(), Dictionary::load(path)?);
                }
            }
            AlignmentMode::None => {}
        }
    }
    Ok(data)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<CVReport> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    run_cv(cfg, &data)
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    SeededRng::derived(seed, stream::FOLDS, &[fold as u64]).next_u64()
}

/// Runs all folds (in parallel) and assembles the report.
pub fn run_cv(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<CVReport> {
    cfg.validate()?;
    let (tweets, langs) = scoped_tweets(cfg, data)?;

    let neural = if cfg.kind.is_neural() {
        Some(neural_shape(cfg, data, &tweets, &langs)?)
    } else {
        None
    };

    let plan = make_folds(&tweets, cfg.folds, cfg.seed, cfg.stratify)?;
    let folds: Vec<FoldResult> = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| {
            let start = Instant::now();
            let (train_idx, test_idx) = plan.split_indices(&tweets, fold);
            let train: Vec<&TokenizedTweet> = train_idx.iter().map(|&i| &tweets[i]).collect();
            let test: Vec<&TokenizedTweet> = test_idx.iter().map(|&i| &tweets[i]).collect();
            let mut audit = LeakageAudit::new(test.iter().map(|t| t.id.as_str()));
            let predictions = match neural {
                Some((dim, max_len)) => neural_fold(cfg, data, &train, &test, &langs, fold, dim, max_len, &mut audit)?,
                None => baseline_fold(cfg, &train, &test, &mut audit)?,
            };
            audit.verify()?;
            let mut result = FoldResult {
                fold,
                overall: Tally::default(),
                per_language: BTreeMap::new(),
                seconds: 0.0,
            };
            for (t, p) in test.iter().zip(&predictions) {
                let hit = usize::from(*p == t.label);
                let tally = result.per_language.entry(t.lang.clone()).or_default();
                tally.correct += hit;
                tally.total += 1;
                result.overall.correct += hit;
                result.overall.total += 1;
            }
            result.seconds = start.elapsed().as_secs_f64();
            log::info!("{} fold {fold}: accuracy {:.4}", cfg.name, result.accuracy());
            Ok(result)
        })
        .collect::<Result<_>>()?;
    Ok(CVReport::new(cfg.name.clone(), cfg.kind.to_string(), cfg.fingerprint(), folds))
}

/// Tweets in the configured scope, with the languages they cover.
fn scoped_tweets(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<(Vec<TokenizedTweet>, Vec<Lang>)> {
    let tweets: Vec<TokenizedTweet> = data
        .tweets
        .iter()
        .filter(|t| match &cfg.scope {
            DatasetScope::All => cfg.languages.contains(&t.lang),
            DatasetScope::Single(l) => t.lang == *l,
        })
        .cloned()
        .collect();
    if tweets.is_empty() {
        return Err(Error::Config("no tweets in scope".into()));
    }
    let mut langs: Vec<Lang> = tweets.iter().map(|t| t.lang.clone()).collect();
    langs.sort();
    langs.dedup();
    Ok((tweets, langs))
}

/// Embedding dimension and padded length for a neural run.
fn neural_shape(cfg: &ExperimentConfig, data: &ExperimentData, tweets: &[TokenizedTweet], langs: &[Lang]) -> Result<(usize, usize)> {
    for lang in langs {
        if !data.tables.contains_key(lang) {
            return Err(Error::Config(format!("no embeddings for {lang}")));
        }
    }
    let dim = check_uniform_dim(langs.iter().map(|l| &data.tables[l]))?;
    if cfg.alignment == AlignmentMode::Matrix {
        for lang in langs.iter().filter(|l| **l != cfg.pivot) {
            let m = data
                .matrices
                .get(lang)
                .ok_or_else(|| Error::Config(format!("alignment = matrix but no matrix for {lang}")))?;
            if m.tgt_lang != cfg.pivot || m.src_lang != *lang || m.dim() != dim {
                return Err(Error::Config(format!(
                    "matrix for {lang} maps {} -> {} in dim {}, expected {lang} -> {} in dim {dim}",
                    m.src_lang,
                    m.tgt_lang,
                    m.dim(),
                    cfg.pivot
                )));
            }
        }
    }
    let longest = tweets.iter().map(TokenizedTweet::len).max().unwrap_or(1);
    let widest = match cfg.kind {
        ClassifierKind::Cnn => cfg.neural.windows.iter().copied().max().unwrap_or(1),
        _ => 1,
    };
    Ok((dim, cfg.neural.max_len.unwrap_or(longest).max(widest)))
}

fn baseline_fold(
    cfg: &ExperimentConfig,
    train: &[&TokenizedTweet],
    test: &[&TokenizedTweet],
    audit: &mut LeakageAudit,
) -> Result<Vec<Polarity>> {
    audit.consult(train.iter().map(|t| t.id.as_str()));
    let space = FeatureSpace::build(train.iter().copied(), cfg.scheme);
    let vectors: Vec<_> = train.iter().map(|t| space.vectorize(t)).collect();
    let labels: Vec<Polarity> = train.iter().map(|t| t.label).collect();
    let test_vectors: Vec<_> = test.iter().map(|t| space.vectorize(t)).collect();
    Ok(match cfg.kind {
        ClassifierKind::Nb => {
            let m = train_nb(&vectors, &labels, space.len(), cfg.nb_alpha, cfg.nb_event)?;
            test_vectors.iter().map(|v| m.predict(v)).collect()
        }
        ClassifierKind::Svm => {
            let opts = DcdOptions {
                c: cfg.svm_c,
                ..DcdOptions::default()
            };
            let m = train_svm_ovo(&vectors, &labels, space.len(), &opts)?;
            test_vectors.iter().map(|v| m.predict(v)).collect()
        }
        _ => unreachable!("neural kinds take the other path"),
    })
}

/// Network shape for a run configuration.
pub fn architecture(cfg: &ExperimentConfig, dim: usize, max_len: usize) -> Architecture {
    let nn = &cfg.neural;
    match cfg.kind {
        ClassifierKind::Lstm => Architecture::Lstm(LstmConfig {
            dim,
            hidden: nn.hidden.unwrap_or(dim),
            candidate: nn.candidate,
            forget_bias: nn.forget_bias,
        }),
        _ => Architecture::Cnn(CnnConfig {
            dim,
            windows: nn.windows.clone(),
            filters_per_window: nn.filters_per_window,
            activation: nn.activation,
            max_len,
        }),
    }
}

#[allow(clippy::too_many_arguments)]
fn neural_fold(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    train: &[&TokenizedTweet],
    test: &[&TokenizedTweet],
    langs: &[Lang],
    fold: usize,
    dim: usize,
    max_len: usize,
    audit: &mut LeakageAudit,
) -> Result<Vec<Polarity>> {
    let seed = fold_seed(cfg.seed, fold);
    let ids: Vec<&str> = train.iter().map(|t| t.id.as_str()).collect();
    let (fit_ids, dev_ids) = split_dev(&ids, cfg.neural.dev_fraction, seed)?;
    audit.consult(fit_ids.iter().copied().chain(dev_ids.iter().copied()));
    let dev_set: HashSet<&str> = dev_ids.into_iter().collect();

    let ctx = EmbeddingContext::build(cfg, data, train, langs, seed, dim, max_len, audit)?;
    let example = |t: &TokenizedTweet| Example {
        input: ctx.embed(t),
        label: t.label,
    };
    let (dev, fit): (Vec<&&TokenizedTweet>, Vec<&&TokenizedTweet>) = train.iter().partition(|t| dev_set.contains(t.id.as_str()));
    let fit: Vec<Example> = fit.into_iter().map(|t| example(t)).collect();
    let dev: Vec<Example> = dev.into_iter().map(|t| example(t)).collect();

    // One network, one parameter vector, for every language in the split.
    let network = Network::initialized(architecture(cfg, dim, max_len), seed)?;
    let train_cfg = nn::TrainConfig {
        seed,
        ..cfg.neural.train.clone()
    };
    let outcome = nn::train(network, &fit, &dev, &train_cfg)?;
    test.iter()
        .map(|t| outcome.network.classify(&ctx.embed(t)).map(|(p, _)| p))
        .collect()
}
