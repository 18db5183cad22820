//! Experiment configuration as a flat `key = value` file.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the directory of the file. Keys:
//!
//! | key | values | default |
//! |---|---|---|
//! | `name` | text | `experiment` |
//! | `corpus` | path | required for file runs |
//! | `format` | `jsonl`, `tsv` | from the extension |
//! | `languages` | comma list | `en,ja,zh` |
//! | `kind` | `nb`, `svm`, `lstm`, `cnn` | `cnn` |
//! | `embeddings.<lang>` | path | |
//! | `alignment` | `none`, `matrix`, `refit` | `none` |
//! | `matrix.<lang>` | path (`matrix` mode) | |
//! | `dictionary.<lang>` | path, `<lang>` to pivot (`refit` mode) | |
//! | `pivot` | language | `en` |
//! | `pivot_k`, `pivot_train` | integers | `3500`, `3000` |
//! | `rank_by` | `tgt`, `src` | `tgt` |
//! | `scope` | `all` or a language | `all` |
//! | `folds`, `seed` | integers | `10`, `0` |
//! | `stratify` | `true`, `false` | `true` |
//! | `tokenize` | `whitespace`, `pretokenized` | `whitespace` |
//! | `scheme` | `per_language`, `cumulative` | `cumulative` |
//! | `alpha`, `nb_event`, `svm_c` | NB smoothing, `multinomial`/`bernoulli`, SVM C | `1`, `multinomial`, `1` |
//! | `batch_size`, `dropout`, `rho`, `eps`, `max_epochs`, `patience` | training | `50`, `0.5`, `0.95`, `1e-6`, `25`, `5` |
//! | `dev_fraction` | real in (0, 1) | `0.1` |
//! | `windows`, `filters`, `activation` | CNN | `3,4,5`, `100`, `tanh` |
//! | `hidden`, `candidate`, `forget_bias` | LSTM | embedding dim, `tanh`, `1` |
//! | `max_len` | integer | longest tweet in the corpus |
//! | `oov_scale` | real | `0.5 / dim` |

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::align::RankedSide;
use crate::baselines::{FeatureScheme, NbEvent};
use crate::corpus::{CorpusFormat, Lang, LanguageSet};
use crate::embeddings::hex_prefix;
use crate::error::{Error, Result};
use crate::nn::{Activation, TrainConfig};
use crate::preprocess::TokenizeMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    Nb,
    Svm,
    Lstm,
    Cnn,
}

impl ClassifierKind {
    pub fn is_neural(self) -> bool {
        matches!(self, ClassifierKind::Lstm | ClassifierKind::Cnn)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Nb => "nb",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Lstm => "lstm",
            ClassifierKind::Cnn => "cnn",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nb" => Ok(ClassifierKind::Nb),
            "svm" => Ok(ClassifierKind::Svm),
            "lstm" => Ok(ClassifierKind::Lstm),
            "cnn" => Ok(ClassifierKind::Cnn),
            _ => Err(Error::Config(format!("unknown classifier kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignmentMode {
    /// Each language keeps its own embedding space.
    None,
    /// Precomputed translation matrices into the pivot space.
    Matrix,
    /// Matrices refit inside every fold from training-split frequencies.
    Refit,
}

impl fmt::Display for AlignmentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AlignmentMode::None => "none",
            AlignmentMode::Matrix => "matrix",
            AlignmentMode::Refit => "refit",
        })
    }
}

impl FromStr for AlignmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AlignmentMode::None),
            "matrix" => Ok(AlignmentMode::Matrix),
            "refit" => Ok(AlignmentMode::Refit),
            _ => Err(Error::Config(format!("unknown alignment mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetScope {
    All,
    Single(Lang),
}

impl fmt::Display for DatasetScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetScope::All => f.write_str("all"),
            DatasetScope::Single(l) => write!(f, "{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralSettings {
    pub train: TrainConfig,
    pub dev_fraction: f64,
    pub windows: Vec<usize>,
    pub filters_per_window: usize,
    pub activation: Activation,
    pub hidden: Option<usize>,
    pub candidate: Activation,
    pub forget_bias: f64,
    pub max_len: Option<usize>,
}

impl Default for NeuralSettings {
    fn default() -> Self {
        NeuralSettings {
            train: TrainConfig::default(),
            dev_fraction: 0.1,
            windows: vec![3, 4, 5],
            filters_per_window: 100,
            activation: Activation::Tanh,
            hidden: None,
            candidate: Activation::Tanh,
            forget_bias: 1.0,
            max_len: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub corpus: Option<PathBuf>,
    pub format: Option<CorpusFormat>,
    pub languages: LanguageSet,
    pub kind: ClassifierKind,
    pub embeddings: BTreeMap<Lang, PathBuf>,
    pub alignment: AlignmentMode,
    pub matrices: BTreeMap<Lang, PathBuf>,
    pub dictionaries: BTreeMap<Lang, PathBuf>,
    pub pivot: Lang,
    pub pivot_k: usize,
    pub pivot_train: usize,
    pub rank_by: RankedSide,
    pub scope: DatasetScope,
    pub folds: usize,
    pub seed: u64,
    pub stratify: bool,
    pub tokenize: TokenizeMode,
    pub scheme: FeatureScheme,
    pub nb_alpha: f64,
    pub nb_event: NbEvent,
    pub svm_c: f64,
    pub neural: NeuralSettings,
    pub oov_scale: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            corpus: None,
            format: None,
            languages: LanguageSet::default(),
            kind: ClassifierKind::Cnn,
            embeddings: BTreeMap::new(),
            alignment: AlignmentMode::None,
            matrices: BTreeMap::new(),
            dictionaries: BTreeMap::new(),
            pivot: Lang::new("en"),
            pivot_k: 3500,
            pivot_train: 3000,
            rank_by: RankedSide::Target,
            scope: DatasetScope::All,
            folds: 10,
            seed: 0,
            stratify: true,
            tokenize: TokenizeMode::Whitespace,
            scheme: FeatureScheme::Cumulative,
            nb_alpha: 1.0,
            nb_event: NbEvent::Multinomial,
            svm_c: 1.0,
            neural: NeuralSettings::default(),
            oov_scale: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean {value:?} for {key}"))),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&content, base, path)
    }

    /// `source` names the file in error messages.
    pub fn parse(content: &str, base: &Path, source: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, idx + 1, "expected key = value"))?;
            cfg.set(key.trim(), value.trim(), base)
                .map_err(|e| Error::parse(source, idx + 1, e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` setting, as from a file or a CLI override.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || base.join(value);
        let nn = &mut self.neural;
        match key {
            "name" => self.name = value.to_string(),
            "corpus" => self.corpus = Some(path()),
            "format" => self.format = Some(parse_value(key, value)?),
            "languages" => self.languages = LanguageSet::new(value.split(',').map(|s| Lang::new(s.trim()))),
            "kind" => self.kind = value.parse()?,
            "alignment" => self.alignment = value.parse()?,
            "pivot" => self.pivot = Lang::new(value),
            "pivot_k" => self.pivot_k = parse_value(key, value)?,
            "pivot_train" => self.pivot_train = parse_value(key, value)?,
            "rank_by" => {
                self.rank_by = match value {
                    "tgt" => RankedSide::Target,
                    "src" => RankedSide::Source,
                    _ => return Err(Error::Config(format!("rank_by must be tgt or src, got {value:?}"))),
                }
            }
            "scope" => {
                self.scope = if value == "all" {
                    DatasetScope::All
                } else {
                    DatasetScope::Single(Lang::new(value))
                }
            }
            "folds" => self.folds = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "stratify" => self.stratify = parse_bool(key, value)?,
            "tokenize" => self.tokenize = value.parse()?,
            "scheme" => self.scheme = value.parse()?,
            "alpha" => self.nb_alpha = parse_value(key, value)?,
            "nb_event" => self.nb_event = value.parse()?,
            "svm_c" => self.svm_c = parse_value(key, value)?,
            "batch_size" => nn.train.batch_size = parse_value(key, value)?,
            "dropout" => nn.train.dropout_rate = parse_value(key, value)?,
            "rho" => nn.train.rho = parse_value(key, value)?,
            "eps" => nn.train.eps = parse_value(key, value)?,
            "max_epochs" => nn.train.max_epochs = parse_value(key, value)?,
            "patience" => nn.train.patience = parse_value(key, value)?,
            "dev_fraction" => nn.dev_fraction = parse_value(key, value)?,
            "windows" => {
                nn.windows = value
                    .split(',')
                    .map(|w| parse_value(key, w.trim()))
                    .collect::<Result<_>>()?
            }
            "filters" => nn.filters_per_window = parse_value(key, value)?,
            "activation" => nn.activation = value.parse()?,
            "hidden" => nn.hidden = Some(parse_value(key, value)?),
            "candidate" => nn.candidate = value.parse()?,
            "forget_bias" => nn.forget_bias = parse_value(key, value)?,
            "max_len" => nn.max_len = Some(parse_value(key, value)?),
            "oov_scale" => self.oov_scale = Some(parse_value(key, value)?),
            _ => {
                if let Some(lang) = key.strip_prefix("embeddings.") {
                    self.embeddings.insert(Lang::new(lang), path());
                } else if let Some(lang) = key.strip_prefix("matrix.") {
                    self.matrices.insert(Lang::new(lang), path());
                } else if let Some(lang) = key.strip_prefix("dictionary.") {
                    self.dictionaries.insert(Lang::new(lang), path());
                } else {
                    return Err(Error::Config(format!("unknown key {key:?}")));
                }
            }
        }
        Ok(())
    }

    /// Canonical `key = value` listing of every setting.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| writeln!(out, "{k} = {v}").unwrap();
        kv("name", &self.name);
        if let Some(c) = &self.corpus {
            kv("corpus", &c.display());
        }
        if let Some(f) = &self.format {
            kv("format", &f);
        }
        let langs: Vec<String> = self.languages.iter().map(|l| l.to_string()).collect();
        kv("languages", &langs.join(","));
        kv("kind", &self.kind);
        for (l, p) in &self.embeddings {
            kv(&format!("embeddings.{l}"), &p.display());
        }
        kv("alignment", &self.alignment);
        for (l, p) in &self.matrices {
            kv(&format!("matrix.{l}"), &p.display());
        }
        for (l, p) in &self.dictionaries {
            kv(&format!("dictionary.{l}"), &p.display());
        }
        kv("pivot", &self.pivot);
        kv("pivot_k", &self.pivot_k);
        kv("pivot_train", &self.pivot_train);
        kv(
            "rank_by",
            &match self.rank_by {
                RankedSide::Target => "tgt",
                RankedSide::Source => "src",
            },
        );
        kv("scope", &self.scope);
        kv("folds", &self.folds);
        kv("seed", &self.seed);
        kv("stratify", &self.stratify);
        kv("tokenize", &self.tokenize);
        kv("scheme", &self.scheme);
        kv("alpha", &self.nb_alpha);
        kv("nb_event", &self.nb_event);
        kv("svm_c", &self.svm_c);
        let nn = &self.neural;
        kv("batch_size", &nn.train.batch_size);
        kv("dropout", &nn.train.dropout_rate);
        kv("rho", &nn.train.rho);
        kv("eps", &nn.train.eps);
        kv("max_epochs", &nn.train.max_epochs);
        kv("patience", &nn.train.patience);
        kv("dev_fraction", &nn.dev_fraction);
        let windows: Vec<String> = nn.windows.iter().map(|w| w.to_string()).collect();
        kv("windows", &windows.join(","));
        kv("filters", &nn.filters_per_window);
        kv("activation", &nn.activation);
        if let Some(h) = nn.hidden {
            kv("hidden", &h);
        }
        kv("candidate", &nn.candidate);
        kv("forget_bias", &nn.forget_bias);
        if let Some(m) = nn.max_len {
            kv("max_len", &m);
        }
        if let Some(s) = self.oov_scale {
            kv("oov_scale", &s);
        }
        out
    }

    /// Short hash of [`to_kv`](Self::to_kv).
    pub fn fingerprint(&self) -> String {
        hex_prefix(&Sha256::digest(self.to_kv().as_bytes()), 16)
    }

    /// Checks settings that do not need the data.
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("cross-validation needs at least 2 folds, got {}", self.folds)));
        }
        if self.kind.is_neural() {
            self.neural.train.validate()?;
            let f = self.neural.dev_fraction;
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!("dev_fraction {f} outside (0, 1)")));
            }
        }
        if self.kind == ClassifierKind::Nb && !(self.nb_alpha > 0.0) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if self.kind == ClassifierKind::Svm && !(self.svm_c > 0.0) {
            return Err(Error::Config("svm_c must be positive".into()));
        }
        if let DatasetScope::Single(l) = &self.scope {
            if !self.languages.contains(l) {
                return Err(Error::Config(format!("scope language {l} is not in the language set")));
            }
        }
        if self.alignment == AlignmentMode::Refit && self.pivot_train > self.pivot_k {
            return Err(Error::Config("pivot_train exceeds pivot_k".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "# run\nname = raw-cnn\ncorpus = data/c.jsonl\nkind = cnn\nembeddings.ja = e/ja.txt\n\
                    alignment = matrix\nmatrix.ja = m/ja.mat\nfolds = 5\nseed = 9\nwindows = 2, 3\nfilters = 4\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/base"), Path::new("x.cfg")).unwrap();
        assert_eq!(cfg.name, "raw-cnn");
        assert_eq!(cfg.corpus.as_deref(), Some(Path::new("/base/data/c.jsonl")));
        assert_eq!(cfg.embeddings[&Lang::new("ja")], PathBuf::from("/base/e/ja.txt"));
        assert_eq!(cfg.neural.windows, vec![2, 3]);
        assert_eq!((cfg.folds, cfg.seed), (5, 9));
        let again = ExperimentConfig::parse(&cfg.to_kv(), Path::new("/"), Path::new("y.cfg")).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.fingerprint(), cfg.fingerprint());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ExperimentConfig::parse("name = a\nbogus = 1\n", Path::new("."), Path::new("x.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = ExperimentConfig::parse("folds = many\n", Path::new("."), Path::new("x.cfg")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn one_fold_is_rejected() {
        let cfg = ExperimentConfig {
            folds: 1,
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn fingerprint_tracks_settings() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            seed: 1,
            ..ExperimentConfig::default()
        };
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }
}
