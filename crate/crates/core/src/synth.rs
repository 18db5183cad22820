//! Synthetic multilingual sentiment fixtures.
//!
//! A shared latent space holds one vector per concept: `markers_per_class`
//! marker concepts scattered around each class centroid, plus filler
//! concepts. Every language names each concept with its own word
//! (`<lang>_p3`, `<lang>_f17`, ...) and embeds it as the latent vector
//! plus noise, rotated by a language-specific random orthogonal matrix.
//! A tweet carries one marker of its class among Zipf-distributed fillers,
//! so its label is recoverable only by recognizing the marker. Dictionaries
//! map every non-pivot word to the pivot-language word for the same
//! concept.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::align::Dictionary;
use crate::corpus::{Lang, Polarity, TweetRecord};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::preprocess::TokenizedTweet;
use crate::rng::{stream, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub pivot: Lang,
    /// Tweets generated per language.
    pub tweets: BTreeMap<Lang, usize>,
    pub dim: usize,
    pub markers_per_class: usize,
    pub fillers: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Norm of each class centroid.
    pub centroid_norm: f64,
    /// Standard deviation of marker concepts around their centroid.
    pub marker_spread: f64,
    /// Per-language noise added to every word vector before rotation.
    pub word_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            pivot: Lang::new("en"),
            tweets: BTreeMap::from([(Lang::new("en"), 200), (Lang::new("ja"), 60), (Lang::new("zh"), 60)]),
            dim: 20,
            markers_per_class: 12,
            fillers: 80,
            min_len: 4,
            max_len: 9,
            centroid_norm: 1.0,
            marker_spread: 0.3,
            word_noise: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub tweets: Vec<TokenizedTweet>,
    pub tables: BTreeMap<Lang, EmbeddingTable>,
    /// Non-pivot language to pivot dictionaries.
    pub dictionaries: BTreeMap<Lang, Dictionary>,
    /// Per-language rotation `R` with word vectors `(latent + noise) R`.
    pub rotations: BTreeMap<Lang, Matrix>,
}

/// Random orthogonal matrix: Gram-Schmidt over Gaussian rows.
pub fn random_rotation(dim: usize, rng: &mut SeededRng) -> Matrix {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
        for _ in 0..2 {
            for r in &rows {
                let d: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(r) {
                    *x -= d * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            rows.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Matrix::from_rows(&rows, dim).expect("square")
}

fn marker_word(lang: &Lang, class: usize, j: usize) -> String {
    let tag = ["p", "u", "n"][class];
    format!("{lang}_{tag}{j}")
}

fn filler_word(lang: &Lang, j: usize) -> String {
    format!("{lang}_f{j}")
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    if cfg.dim == 0 || cfg.markers_per_class == 0 || cfg.fillers == 0 || cfg.min_len < 1 || cfg.max_len < cfg.min_len {
        return Err(Error::Config("synthetic corpus needs positive sizes and min_len <= max_len".into()));
    }
    if !cfg.tweets.contains_key(&cfg.pivot) {
        return Err(Error::Config(format!("pivot language {} generates no tweets", cfg.pivot)));
    }
    let mut rng = SeededRng::new(cfg.seed, stream::SYNTH);
    let d = cfg.dim;
    let unit = |rng: &mut SeededRng| {
        let v: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    let centroids: Vec<Vec<f64>> = (0..3)
        .map(|_| unit(&mut rng).into_iter().map(|x| x * cfg.centroid_norm).collect())
        .collect();
    // latent vectors: markers class by class, then fillers
    let mut concepts: Vec<Vec<f64>> = Vec::new();
    for c in &centroids {
        for _ in 0..cfg.markers_per_class {
            concepts.push(c.iter().map(|x| x + cfg.marker_spread * rng.gaussian() / (d as f64).sqrt()).collect());
        }
    }
    for _ in 0..cfg.fillers {
        concepts.push(unit(&mut rng));
    }
    let word = |lang: &Lang, concept: usize| {
        let m = cfg.markers_per_class;
        if concept < 3 * m {
            marker_word(lang, concept / m, concept % m)
        } else {
            filler_word(lang, concept - 3 * m)
        }
    };

    let mut tables = BTreeMap::new();
    let mut rotations = BTreeMap::new();
    let mut dictionaries = BTreeMap::new();
    for lang in cfg.tweets.keys() {
        let rot = random_rotation(d, &mut rng);
        let entries: Vec<(String, Vec<f64>)> = concepts
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let noisy: Vec<f64> = v.iter().map(|x| x + cfg.word_noise * rng.gaussian()).collect();
                (word(lang, i), rot.left_mul(&noisy))
            })
            .collect();
        tables.insert(lang.clone(), EmbeddingTable::from_entries(lang.clone(), d, entries)?);
        rotations.insert(lang.clone(), rot);
        if *lang != cfg.pivot {
            dictionaries.insert(
                lang.clone(),
                Dictionary::new((0..concepts.len()).map(|i| (word(lang, i), word(&cfg.pivot, i))).collect()),
            );
        }
    }

    // Zipf weights over fillers so pivot ranking by frequency is meaningful
    let weights: Vec<f64> = (1..=cfg.fillers).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let draw_filler = |rng: &mut SeededRng| {
        let mut u = rng.next_f64() * total;
        for (j, w) in weights.iter().enumerate() {
            if u < *w {
                return j;
            }
            u -= w;
        }
        cfg.fillers - 1
    };
    let mut tweets = Vec::new();
    for (lang, &n) in &cfg.tweets {
        for i in 0..n {
            let class = i % 3;
            let len = cfg.min_len + rng.below((cfg.max_len - cfg.min_len + 1) as u64) as usize;
            let at = rng.below(len as u64) as usize;
            let marker = rng.below(cfg.markers_per_class as u64) as usize;
            let tokens = (0..len)
                .map(|t| {
                    if t == at {
                        marker_word(lang, class, marker)
                    } else {
                        filler_word(lang, draw_filler(&mut rng))
                    }
                })
                .collect();
            tweets.push(TokenizedTweet {
                id: format!("{lang}-{i:05}"),
                lang: lang.clone(),
                label: Polarity::from_code(class).expect("three classes"),
                tokens,
            });
        }
    }
    Ok(SynthCorpus {
        tweets,
        tables,
        dictionaries,
        rotations,
    })
}

impl SynthCorpus {
    /// Writes `corpus.jsonl` (pretokenized), `emb.<lang>.txt` and
    /// `dict.<lang>-<pivot>.tsv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path, pivot: &Lang) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut lines = String::new();
        for t in &self.tweets {
            let rec = TweetRecord {
                id: t.id.clone(),
                lang: t.lang.clone(),
                text: t.tokens.join(" "),
                tokens: Some(t.tokens.clone()),
                label: t.label,
            };
            lines.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            lines.push('\n');
        }
        let corpus = dir.join("corpus.jsonl");
        fs::write(&corpus, lines).map_err(|e| Error::io(&corpus, e))?;
        for (lang, table) in &self.tables {
            table.write_word2vec(&dir.join(format!("emb.{lang}.txt")))?;
        }
        for (lang, dict) in &self.dictionaries {
            let path = dir.join(format!("dict.{lang}-{pivot}.tsv"));
            let body: String = dict.entries().iter().map(|(s, t)| format!("{s}\t{t}\n")).collect();
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_is_orthogonal() {
        let r = random_rotation(8, &mut SeededRng::new(1, 0));
        let rtr = r.transpose().matmul(&r).unwrap();
        assert!(rtr.sub(&Matrix::identity(8)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn corpus_shape_and_labels() {
        let cfg = SynthConfig::default();
        let c = generate(&cfg).unwrap();
        assert_eq!(c.tweets.len(), 320);
        assert_eq!(c.tables.len(), 3);
        assert_eq!(c.dictionaries.len(), 2);
        for t in &c.tweets {
            let tag = ["_p", "_u", "_n"][t.label.code()];
            assert_eq!(t.tokens.iter().filter(|w| w.contains(tag)).count(), 1);
            assert!(t.tokens.iter().all(|w| c.tables[&t.lang].contains(w)));
        }
    }

    #[test]
    fn spaces_differ_by_rotation() {
        let cfg = SynthConfig {
            word_noise: 0.0,
            ..SynthConfig::default()
        };
        let c = generate(&cfg).unwrap();
        let (en, ja) = (&c.tables[&Lang::new("en")], &c.tables[&Lang::new("ja")]);
        let (re, rj) = (&c.rotations[&Lang::new("en")], &c.rotations[&Lang::new("ja")]);
        // ja R_ja^T R_en = en for the same concept
        let map = rj.transpose().matmul(re).unwrap();
        let mapped = map.left_mul(ja.get("ja_f3").unwrap());
        let target = en.get("en_f3").unwrap();
        assert!(mapped.iter().zip(target).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&SynthConfig::default()).unwrap();
        let b = generate(&SynthConfig::default()).unwrap();
        assert_eq!(a.tweets, b.tweets);
    }
}
