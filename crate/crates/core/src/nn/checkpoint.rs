//! Trained-model artifacts and their text checkpoint format.
//!
//! ```text
//! xlsent-model v1
//! kind cnn
//! dim 100
//! windows 3,4,5            (cnn: windows, filters_per_window, activation, max_len)
//! hidden 100               (lstm: hidden, candidate, forget_bias)
//! batch_size 50            (training hyperparameters follow)
//! ...
//! fingerprint_preprocessing <hex>
//! fingerprint_embeddings <hex>
//! fingerprint_alignment <hex>
//! history <n>
//! <epoch> <train_loss> <dev_accuracy>     (n lines)
//! block <name> <rows> <cols>
//! <cols reals>                            (rows lines)
//! ...
//! end
//! ```
//!
//! Reals are written with the shortest representation that parses back to
//! the same `f64`, so a round trip is exact.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::train::{EpochStats, TrainConfig};
use super::{Activation, Architecture, CnnConfig, LstmConfig, ModelKind, Network, PaddedTweetMatrix};
use crate::corpus::Polarity;
use crate::error::{Error, Result};

const MAGIC: &str = "xlsent-model v1";

/// Identifies the preprocessing rules, embedding tables and alignment a
/// model was trained against.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelFingerprints {
    pub preprocessing: String,
    pub embeddings: String,
    pub alignment: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub network: Network,
    pub train_config: TrainConfig,
    pub fingerprints: ModelFingerprints,
    pub history: Vec<EpochStats>,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.network.kind()
    }

    /// Fails with a configuration error when `context` differs from the
    /// fingerprints recorded at training time.
    pub fn predict(&self, x: &PaddedTweetMatrix, context: &ModelFingerprints) -> Result<(Polarity, [f64; 3])> {
        if *context != self.fingerprints {
            return Err(Error::Config(format!(
                "model was trained with fingerprints {:?} but the context has {:?}",
                self.fingerprints, context
            )));
        }
        self.network.classify(x)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| writeln!(out, "{k} {v}").unwrap();
        kv("kind", &self.kind());
        match self.network.architecture() {
            Architecture::Lstm(c) => {
                kv("dim", &c.dim);
                kv("hidden", &c.hidden);
                kv("candidate", &c.candidate);
                kv("forget_bias", &c.forget_bias);
            }
            Architecture::Cnn(c) => {
                kv("dim", &c.dim);
                let windows: Vec<String> = c.windows.iter().map(|w| w.to_string()).collect();
                kv("windows", &windows.join(","));
                kv("filters_per_window", &c.filters_per_window);
                kv("activation", &c.activation);
                kv("max_len", &c.max_len);
            }
        }
        let t = &self.train_config;
        kv("batch_size", &t.batch_size);
        kv("dropout_rate", &t.dropout_rate);
        kv("rho", &t.rho);
        kv("eps", &t.eps);
        kv("max_epochs", &t.max_epochs);
        kv("patience", &t.patience);
        kv("seed", &t.seed);
        let f = &self.fingerprints;
        kv("fingerprint_preprocessing", &f.preprocessing);
        kv("fingerprint_embeddings", &f.embeddings);
        kv("fingerprint_alignment", &f.alignment);
        let mut text = format!("{MAGIC}\n{out}");
        writeln!(text, "history {}", self.history.len()).unwrap();
        for h in &self.history {
            writeln!(text, "{} {} {}", h.epoch, h.train_loss, h.dev_accuracy).unwrap();
        }
        let params = self.network.params();
        for b in self.network.blocks() {
            writeln!(text, "block {} {} {}", b.name, b.rows, b.cols).unwrap();
            for row in b.of(params).chunks(b.cols.max(1)) {
                let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                text.push_str(&cells.join(" "));
                text.push('\n');
            }
        }
        text.push_str("end\n");
        text
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, path)
    }

    pub fn parse(content: &str, path: &Path) -> Result<Self> {
        let mut lines = content.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .ok_or_else(|| Error::parse(path, content.lines().count() + 1, format!("unexpected end, expected {what}")))
        };
        let (_, magic) = next("header")?;
        if magic.trim() != MAGIC {
            return Err(Error::parse(path, 1, format!("missing {MAGIC:?} header")));
        }

        let mut header: HashMap<&str, (usize, &str)> = HashMap::new();
        let history_len = loop {
            let (no, line) = next("header field")?;
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| Error::parse(path, no, "expected \"key value\""))?;
            if k == "history" {
                break v.trim().parse::<usize>().map_err(|_| Error::parse(path, no, "bad history count"))?;
            }
            header.insert(k, (no, v.trim()));
        };
        fn get<T: FromStr>(h: &HashMap<&str, (usize, &str)>, key: &str, path: &Path) -> Result<T> {
            let (no, v) = h
                .get(key)
                .ok_or_else(|| Error::parse(path, 1, format!("missing header field {key:?}")))?;
            v.parse().map_err(|_| Error::parse(path, *no, format!("bad value for {key}")))
        }

        let kind: ModelKind = get(&header, "kind", path)?;
        let dim: usize = get(&header, "dim", path)?;
        let arch = match kind {
            ModelKind::Lstm => Architecture::Lstm(LstmConfig {
                dim,
                hidden: get(&header, "hidden", path)?,
                candidate: get::<Activation>(&header, "candidate", path)?,
                forget_bias: get(&header, "forget_bias", path)?,
            }),
            ModelKind::Cnn => {
                let raw: String = get(&header, "windows", path)?;
                let windows = raw
                    .split(',')
                    .map(|w| w.trim().parse())
                    .collect::<std::result::Result<Vec<usize>, _>>()
                    .map_err(|_| Error::parse(path, header["windows"].0, "bad window list"))?;
                Architecture::Cnn(CnnConfig {
                    dim,
                    windows,
                    filters_per_window: get(&header, "filters_per_window", path)?,
                    activation: get(&header, "activation", path)?,
                    max_len: get(&header, "max_len", path)?,
                })
            }
        };
        let train_config = TrainConfig {
            batch_size: get(&header, "batch_size", path)?,
            dropout_rate: get(&header, "dropout_rate", path)?,
            rho: get(&header, "rho", path)?,
            eps: get(&header, "eps", path)?,
            max_epochs: get(&header, "max_epochs", path)?,
            patience: get(&header, "patience", path)?,
            seed: get(&header, "seed", path)?,
        };
        let fingerprints = ModelFingerprints {
            preprocessing: get(&header, "fingerprint_preprocessing", path)?,
            embeddings: get(&header, "fingerprint_embeddings", path)?,
            alignment: get(&header, "fingerprint_alignment", path)?,
        };

        let mut history = Vec::with_capacity(history_len);
        for _ in 0..history_len {
            let (no, line) = next("history row")?;
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::parse(path, no, "expected \"epoch train_loss dev_accuracy\"");
            if f.len() != 3 {
                return Err(bad());
            }
            history.push(EpochStats {
                epoch: f[0].parse().map_err(|_| bad())?,
                train_loss: f[1].parse().map_err(|_| bad())?,
                dev_accuracy: f[2].parse().map_err(|_| bad())?,
            });
        }

        let mut network = Network::zeros(arch).map_err(|e| Error::parse(path, 1, e.to_string()))?;
        let blocks = network.blocks().to_vec();
        for b in &blocks {
            let (no, line) = next("block header")?;
            let expected = format!("block {} {} {}", b.name, b.rows, b.cols);
            if line.trim() != expected {
                return Err(Error::parse(path, no, format!("expected {expected:?}")));
            }
            let slot = b.of_mut(network.params_mut());
            for r in 0..b.rows {
                let (no, line) = next("block row")?;
                let row: Vec<f64> = line
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(path, no, "bad number"))?;
                if row.len() != b.cols || row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::parse(path, no, format!("expected {} finite values", b.cols)));
                }
                slot[r * b.cols..(r + 1) * b.cols].copy_from_slice(&row);
            }
        }
        let (no, line) = next("end")?;
        if line.trim() != "end" {
            return Err(Error::parse(path, no, "expected \"end\""));
        }
        Ok(TrainedModel {
            network,
            train_config,
            fingerprints,
            history,
        })
    }
}
