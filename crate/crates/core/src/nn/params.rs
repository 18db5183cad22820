//! Flat parameter storage addressed through named blocks.

use crate::rng::{stream, SeededRng};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn of<'a>(&self, values: &'a [f64]) -> &'a [f64] {
        &values[self.offset..self.offset + self.len()]
    }

    pub fn of_mut<'a>(&self, values: &'a mut [f64]) -> &'a mut [f64] {
        &mut values[self.offset..self.offset + self.len()]
    }
}

/// Builds a block layout; gradients reuse the same layout over a buffer of
/// equal length.
#[derive(Debug, Default)]
pub(crate) struct LayoutBuilder {
    pub blocks: Vec<Block>,
    pub len: usize,
}

impl LayoutBuilder {
    pub fn add(&mut self, name: impl Into<String>, rows: usize, cols: usize) -> Block {
        let block = Block {
            name: name.into(),
            offset: self.len,
            rows,
            cols,
        };
        self.len += rows * cols;
        self.blocks.push(block.clone());
        block
    }
}

/// How a block is filled at initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Init {
    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
    Glorot { fan_in: usize, fan_out: usize },
    Constant(f64),
}

pub(crate) fn initialize(blocks: &[(Block, Init)], total: usize, seed: u64) -> Vec<f64> {
    let mut values = vec![0.0; total];
    let mut rng = SeededRng::new(seed, stream::INIT);
    for (block, init) in blocks {
        let slot = block.of_mut(&mut values);
        match *init {
            Init::Glorot { fan_in, fan_out } => {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for v in slot {
                    *v = rng.uniform(-bound, bound);
                }
            }
            Init::Constant(c) => slot.fill(c),
        }
    }
    values
}

/// `out += M v` for a row-major `rows x cols` matrix.
pub(crate) fn matvec_add(m: &[f64], cols: usize, v: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += dot(row, v);
    }
}

/// `out += M^T v`.
pub(crate) fn matvec_t_add(m: &[f64], cols: usize, v: &[f64], out: &mut [f64]) {
    for (&vi, row) in v.iter().zip(m.chunks_exact(cols)) {
        if vi != 0.0 {
            axpy(vi, row, out);
        }
    }
}

/// `g += a b^T`.
pub(crate) fn outer_add(g: &mut [f64], a: &[f64], b: &[f64]) {
    for (&ai, row) in a.iter().zip(g.chunks_exact_mut(b.len())) {
        if ai != 0.0 {
            axpy(ai, b, row);
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
