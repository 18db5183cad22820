//! Parameter-sharing neural classifiers: an LSTM and a CNN over embedded
//! tweets, trained with hand-written backpropagation and Adadelta.
//!
//! One [`Network`] holds a single flat parameter vector that serves tweets
//! of every language. Parameters are grouped into named [`Block`]s; a
//! gradient is a vector of the same length under the same layout.
//!
//! Dropout is applied to the penultimate layer (the pooled filter vector
//! for the CNN, the last hidden state for the LSTM) as a multiplier mask
//! whose entries are either 0 or `1 / (1 - rate)`.

pub mod adadelta;
pub mod checkpoint;
mod cnn;
mod lstm;
mod params;
pub mod train;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::Polarity;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use adadelta::Adadelta;
pub use checkpoint::{ModelFingerprints, TrainedModel};
pub use cnn::CnnConfig;
pub use lstm::LstmConfig;
pub use params::Block;
pub use train::{accuracy, dropout_mask, train, training_log_csv, EpochStats, TrainConfig, TrainOutcome};

use cnn::CnnLayout;
use lstm::LstmLayout;
use params::{matvec_add, matvec_t_add, outer_add, LayoutBuilder};

/// Examples per sequential gradient-summation chunk. Chunks are reduced in
/// order, so gradients do not depend on the thread count.
const REDUCE_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn sigmoid(x: f64) -> f64 {
        if x >= 0.0 {
            1.0 / (1.0 + (-x).exp())
        } else {
            let e = x.exp();
            e / (1.0 + e)
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => Self::sigmoid(x),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative at pre-activation `x`; zero at the ReLU kink.
    pub fn derivative(self, x: f64) -> f64 {
        self.derivative_from_output(self.apply(x))
    }

    pub(crate) fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            _ => Err(Error::Config(format!("unknown activation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Lstm,
    Cnn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Cnn => "cnn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lstm" => Ok(ModelKind::Lstm),
            "cnn" => Ok(ModelKind::Cnn),
            _ => Err(Error::Config(format!("unknown model kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Architecture {
    Lstm(LstmConfig),
    Cnn(CnnConfig),
}

impl Architecture {
    pub fn kind(&self) -> ModelKind {
        match self {
            Architecture::Lstm(_) => ModelKind::Lstm,
            Architecture::Cnn(_) => ModelKind::Cnn,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Architecture::Lstm(c) => c.dim,
            Architecture::Cnn(c) => c.dim,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Config("embedding dim must be positive".into()));
        }
        match self {
            Architecture::Lstm(c) => {
                if c.hidden == 0 {
                    return Err(Error::Config("hidden size must be positive".into()));
                }
                if c.candidate == Activation::Relu {
                    return Err(Error::Config("LSTM candidate activation must be tanh or sigmoid".into()));
                }
            }
            Architecture::Cnn(c) => {
                if c.windows.is_empty() || c.windows.contains(&0) || c.filters_per_window == 0 {
                    return Err(Error::Config("CNN needs positive window sizes and filter counts".into()));
                }
                let widest = *c.windows.iter().max().expect("non-empty");
                if c.max_len < widest {
                    return Err(Error::Config(format!(
                        "max_len {} is shorter than the widest window {widest}",
                        c.max_len
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The true rows of a tweet matrix plus the padded length it stands for.
/// Rows from `true_length` to `max_len` are implicit zeros; rows beyond
/// `max_len` are dropped at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedTweetMatrix {
    rows: Matrix,
    max_len: usize,
}

impl PaddedTweetMatrix {
    pub fn new(rows: Matrix, max_len: usize) -> Self {
        let rows = if rows.rows() > max_len {
            let cols = rows.cols();
            Matrix::from_vec(max_len, cols, rows.as_slice()[..max_len * cols].to_vec()).expect("prefix shape")
        } else {
            rows
        };
        PaddedTweetMatrix { rows, max_len }
    }

    pub fn true_length(&self) -> usize {
        self.rows.rows()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    /// Materialized `max_len x dim` matrix with zero padding at the back.
    pub fn to_dense(&self) -> Matrix {
        let mut data = self.rows.as_slice().to_vec();
        data.resize(self.max_len * self.dim(), 0.0);
        Matrix::from_vec(self.max_len, self.dim(), data).expect("padded shape")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: PaddedTweetMatrix,
    pub label: Polarity,
}

pub fn softmax(z: &[f64; 3]) -> [f64; 3] {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// `-log softmax(z)[label]`.
pub fn cross_entropy(z: &[f64; 3], label: Polarity) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    lse - z[label.code()]
}

/// Highest-probability class; ties go to the lowest label code.
pub fn argmax_polarity(p: &[f64; 3]) -> Polarity {
    let mut best = 0;
    for k in 1..3 {
        if p[k] > p[best] {
            best = k;
        }
    }
    Polarity::from_code(best).expect("three classes")
}

type BlockInits = Vec<(Block, params::Init)>;

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
enum Layout {
    Lstm(LstmLayout),
    Cnn(CnnLayout),
}

#[derive(Debug, Clone)]
pub struct Network {
    arch: Architecture,
    layout: Layout,
    blocks: Vec<Block>,
    params: Vec<f64>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.arch == other.arch && self.params == other.params
    }
}

impl Network {
    fn layout(arch: &Architecture) -> Result<(Layout, LayoutBuilder, BlockInits)> {
        arch.validate()?;
        let mut lb = LayoutBuilder::default();
        let (layout, inits) = match arch {
            Architecture::Lstm(c) => {
                let (l, i) = LstmLayout::build(c.clone(), &mut lb);
                (Layout::Lstm(l), i)
            }
            Architecture::Cnn(c) => {
                let (l, i) = CnnLayout::build(c.clone(), &mut lb);
                (Layout::Cnn(l), i)
            }
        };
        Ok((layout, lb, inits))
    }

    /// Every parameter zero.
    pub fn zeros(arch: Architecture) -> Result<Self> {
        let (layout, lb, _) = Self::layout(&arch)?;
        Ok(Network {
            arch,
            layout,
            params: vec![0.0; lb.len],
            blocks: lb.blocks,
        })
    }

    /// Glorot-uniform weights and zero biases (forget-gate bias from the
    /// LSTM config).
    pub fn initialized(arch: Architecture, seed: u64) -> Result<Self> {
        let (layout, lb, inits) = Self::layout(&arch)?;
        Ok(Network {
            arch,
            layout,
            params: params::initialize(&inits, lb.len, seed),
            blocks: lb.blocks,
        })
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        if params.len() != net.params.len() {
            return Err(Error::Argument(format!(
                "expected {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn kind(&self) -> ModelKind {
        self.arch.kind()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Width of the layer dropout applies to.
    pub fn penultimate_size(&self) -> usize {
        match &self.arch {
            Architecture::Lstm(c) => c.hidden,
            Architecture::Cnn(c) => c.total_filters(),
        }
    }

    fn output_blocks(&self) -> (&Block, &Block) {
        match &self.layout {
            Layout::Lstm(l) => (&l.out_w, &l.out_b),
            Layout::Cnn(l) => (&l.out_w, &l.out_b),
        }
    }

    fn check_input(&self, x: &PaddedTweetMatrix, mask: Option<&[f64]>) -> Result<()> {
        if x.true_length() == 0 {
            return Err(Error::Argument("empty token sequence".into()));
        }
        if x.dim() != self.arch.dim() {
            return Err(Error::Argument(format!(
                "input dim {} does not match model dim {}",
                x.dim(),
                self.arch.dim()
            )));
        }
        if let Some(m) = mask {
            if m.len() != self.penultimate_size() {
                return Err(Error::Argument(format!(
                    "dropout mask has {} entries, expected {}",
                    m.len(),
                    self.penultimate_size()
                )));
            }
        }
        Ok(())
    }

    fn head(&self, features: &[f64]) -> [f64; 3] {
        let (out_w, out_b) = self.output_blocks();
        let mut z = [0.0; 3];
        z.copy_from_slice(out_b.of(&self.params));
        matvec_add(out_w.of(&self.params), features.len(), features, &mut z);
        z
    }

    fn penultimate(&self, x: &PaddedTweetMatrix) -> Vec<f64> {
        match &self.layout {
            Layout::Lstm(l) => l.forward(&self.params, x.rows()).last_hidden().to_vec(),
            Layout::Cnn(l) => l.forward(&self.params, x.rows()).pooled,
        }
    }

    pub fn logits(&self, x: &PaddedTweetMatrix, mask: Option<&[f64]>) -> Result<[f64; 3]> {
        self.check_input(x, mask)?;
        let mut features = self.penultimate(x);
        if let Some(m) = mask {
            for (f, k) in features.iter_mut().zip(m) {
                *f *= k;
            }
        }
        Ok(self.head(&features))
    }

    /// Class probabilities with dropout disabled.
    pub fn probabilities(&self, x: &PaddedTweetMatrix) -> Result<[f64; 3]> {
        Ok(softmax(&self.logits(x, None)?))
    }

    pub fn classify(&self, x: &PaddedTweetMatrix) -> Result<(Polarity, [f64; 3])> {
        let p = self.probabilities(x)?;
        Ok((argmax_polarity(&p), p))
    }

    /// One LSTM step from `(h_prev, c_prev)` with this network's weights.
    pub fn lstm_cell_step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match &self.layout {
            Layout::Lstm(l) => {
                if x.len() != l.cfg.dim || h_prev.len() != l.cfg.hidden || c_prev.len() != l.cfg.hidden {
                    return Err(Error::Argument("cell step input sizes do not match the model".into()));
                }
                Ok(l.cell_step(&self.params, x, h_prev, c_prev))
            }
            Layout::Cnn(_) => Err(Error::Argument("not an LSTM".into())),
        }
    }

    /// Adds the gradient of one example's cross-entropy, scaled by `scale`,
    /// into `grad`, and returns the unscaled loss.
    fn accumulate(&self, ex: &Example, mask: Option<&[f64]>, scale: f64, grad: &mut [f64]) -> f64 {
        let x = ex.input.rows();
        let (features, lstm_trace, cnn_trace) = match &self.layout {
            Layout::Lstm(l) => {
                let t = l.forward(&self.params, x);
                (t.last_hidden().to_vec(), Some(t), None)
            }
            Layout::Cnn(l) => {
                let t = l.forward(&self.params, x);
                (t.pooled.clone(), None, Some(t))
            }
        };
        let mut dropped = features;
        if let Some(m) = mask {
            for (f, k) in dropped.iter_mut().zip(m) {
                *f *= k;
            }
        }
        let z = self.head(&dropped);
        let loss = cross_entropy(&z, ex.label);
        let mut dz = softmax(&z);
        dz[ex.label.code()] -= 1.0;
        for v in dz.iter_mut() {
            *v *= scale;
        }

        let (out_w, out_b) = self.output_blocks();
        outer_add(out_w.of_mut(grad), &dz, &dropped);
        for (g, d) in out_b.of_mut(grad).iter_mut().zip(&dz) {
            *g += d;
        }
        let mut d_feat = vec![0.0; dropped.len()];
        matvec_t_add(out_w.of(&self.params), dropped.len(), &dz, &mut d_feat);
        if let Some(m) = mask {
            for (d, k) in d_feat.iter_mut().zip(m) {
                *d *= k;
            }
        }
        match (&self.layout, lstm_trace, cnn_trace) {
            (Layout::Lstm(l), Some(t), _) => l.backward(&self.params, x, &t, &d_feat, grad),
            (Layout::Cnn(l), _, Some(t)) => l.backward(x, &t, &d_feat, grad),
            _ => unreachable!("trace matches layout"),
        }
        loss
    }

    /// Mean cross-entropy over the batch and its gradient. `masks`, when
    /// given, holds one dropout mask per example and is treated as a
    /// constant.
    pub fn loss_and_gradients(&self, batch: &[&Example], masks: Option<&[Vec<f64>]>) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Argument("empty batch".into()));
        }
        if let Some(m) = masks {
            if m.len() != batch.len() {
                return Err(Error::Argument("one dropout mask per example is required".into()));
            }
        }
        for (j, ex) in batch.iter().enumerate() {
            self.check_input(&ex.input, masks.map(|m| m[j].as_slice()))?;
        }
        let scale = 1.0 / batch.len() as f64;
        let partials: Vec<(f64, Vec<f64>)> = batch
            .par_chunks(REDUCE_CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let mut grad = vec![0.0; self.params.len()];
                let mut loss = 0.0;
                for (j, ex) in chunk.iter().enumerate() {
                    let mask = masks.map(|m| m[c * REDUCE_CHUNK + j].as_slice());
                    loss += self.accumulate(ex, mask, scale, &mut grad);
                }
                (loss, grad)
            })
            .collect();
        let mut total_loss = 0.0;
        let mut grad = vec![0.0; self.params.len()];
        for (loss, g) in partials {
            total_loss += loss;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        Ok((total_loss * scale, grad))
    }
}

#[cfg(test)]
mod tests;
