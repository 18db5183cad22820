//! Convolution over every window of the zero-padded tweet matrix, max-pool
//! per filter, softmax layer over the pooled vector.

use super::params::{axpy, dot, Block, Init, LayoutBuilder};
use super::Activation;
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CnnConfig {
    pub dim: usize,
    pub windows: Vec<usize>,
    pub filters_per_window: usize,
    pub activation: Activation,
    pub max_len: usize,
}

impl CnnConfig {
    pub fn new(dim: usize, max_len: usize) -> Self {
        CnnConfig {
            dim,
            windows: vec![3, 4, 5],
            filters_per_window: 100,
            activation: Activation::Tanh,
            max_len,
        }
    }

    pub fn total_filters(&self) -> usize {
        self.windows.len() * self.filters_per_window
    }
}

#[derive(Debug, Clone)]
struct Bank {
    width: usize,
    w: Block,
    b: Block,
}

#[derive(Debug, Clone)]
pub(crate) struct CnnLayout {
    pub cfg: CnnConfig,
    banks: Vec<Bank>,
    pub out_w: Block,
    pub out_b: Block,
}

/// Per-filter pooled value and where it came from.
pub(crate) struct CnnTrace {
    pub pooled: Vec<f64>,
    /// Window start index and pre-activation at the argmax.
    argmax: Vec<(usize, f64)>,
}

impl CnnLayout {
    pub fn build(cfg: CnnConfig, lb: &mut LayoutBuilder) -> (Self, Vec<(Block, Init)>) {
        let mut banks = Vec::new();
        let mut inits = Vec::new();
        for &width in &cfg.windows {
            let w = lb.add(format!("conv{width}_W"), cfg.filters_per_window, width * cfg.dim);
            let b = lb.add(format!("conv{width}_b"), cfg.filters_per_window, 1);
            inits.push((
                w.clone(),
                Init::Glorot {
                    fan_in: width * cfg.dim,
                    fan_out: cfg.filters_per_window,
                },
            ));
            inits.push((b.clone(), Init::Constant(0.0)));
            banks.push(Bank { width, w, b });
        }
        let total = cfg.total_filters();
        let out_w = lb.add("out_W", 3, total);
        let out_b = lb.add("out_b", 3, 1);
        inits.push((out_w.clone(), Init::Glorot { fan_in: total, fan_out: 3 }));
        inits.push((out_b.clone(), Init::Constant(0.0)));
        (CnnLayout { cfg, banks, out_w, out_b }, inits)
    }

    /// Rows of `x` beyond `max_len` are ignored; rows from `x.rows()` up to
    /// `max_len` are zero padding. A window lying wholly in the padding has
    /// pre-activation equal to the bias, so only its first occurrence is
    /// evaluated.
    pub fn forward(&self, p: &[f64], x: &Matrix) -> CnnTrace {
        let d = self.cfg.dim;
        let n = x.rows().min(self.cfg.max_len);
        let data = &x.as_slice()[..n * d];
        let act = self.cfg.activation;
        let mut pooled = Vec::with_capacity(self.cfg.total_filters());
        let mut argmax = Vec::with_capacity(self.cfg.total_filters());
        for bank in &self.banks {
            let positions = self.cfg.max_len + 1 - bank.width;
            let weights = bank.w.of(p);
            let biases = bank.b.of(p);
            for (f, row) in weights.chunks_exact(bank.width * d).enumerate() {
                let b = biases[f];
                let mut best = (0usize, f64::NEG_INFINITY, 0.0);
                for i in 0..positions.min(n + 1) {
                    let end = (i + bank.width).min(n);
                    let pre = if i < n {
                        b + dot(&row[..(end - i) * d], &data[i * d..end * d])
                    } else {
                        b
                    };
                    let c = act.apply(pre);
                    if c > best.1 {
                        best = (i, c, pre);
                    }
                }
                pooled.push(best.1);
                argmax.push((best.0, best.2));
            }
        }
        CnnTrace { pooled, argmax }
    }

    /// Accumulates parameter gradients given the gradient at the pooled
    /// vector.
    pub fn backward(&self, x: &Matrix, trace: &CnnTrace, d_pooled: &[f64], grad: &mut [f64]) {
        let d = self.cfg.dim;
        let n = x.rows().min(self.cfg.max_len);
        let data = &x.as_slice()[..n * d];
        let act = self.cfg.activation;
        let mut k = 0;
        for bank in &self.banks {
            let row_len = bank.width * d;
            for f in 0..self.cfg.filters_per_window {
                let (i, pre) = trace.argmax[k];
                let dpre = d_pooled[k] * act.derivative(pre);
                k += 1;
                if dpre == 0.0 {
                    continue;
                }
                bank.b.of_mut(grad)[f] += dpre;
                if i < n {
                    let end = (i + bank.width).min(n);
                    let row = &mut bank.w.of_mut(grad)[f * row_len..(f + 1) * row_len];
                    axpy(dpre, &data[i * d..end * d], &mut row[..(end - i) * d]);
                }
            }
        }
    }
}
