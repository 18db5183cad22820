//! Linear soft-margin SVM by dual coordinate descent, combined one-vs-one
//! for three classes.
//!
//! The bias is an appended constant feature of value 1, so it is
//! regularized with the weights: the primal is
//! `1/2 (||w||^2 + b^2) + C sum_i max(0, 1 - y_i (w.x_i + b))`.
//! Coordinates are swept in index order with no shrinking; training stops
//! once the largest projected-gradient magnitude in a sweep is at most
//! `tol`.
//!
//! Dump format: `svm-ovo v1`, `features <d>`, then for each pair a line
//! `pair <a> <b>` followed by one line of `d + 1` reals (weights, then
//! bias). A positive decision value votes for `<a>`.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::SparseBinaryVector;
use crate::corpus::Polarity;
use crate::error::{Error, Result};

/// A training row: `dot` against the first `d` weights, ignoring the bias.
pub trait FeatureRow: Sync {
    fn dot(&self, w: &[f64]) -> f64;
    fn add_scaled(&self, w: &mut [f64], alpha: f64);
    fn squared_norm(&self) -> f64;
}

impl FeatureRow for SparseBinaryVector {
    fn dot(&self, w: &[f64]) -> f64 {
        self.ids().iter().filter_map(|&i| w.get(i as usize)).sum()
    }

    fn add_scaled(&self, w: &mut [f64], alpha: f64) {
        for &i in self.ids() {
            if let Some(x) = w.get_mut(i as usize) {
                *x += alpha;
            }
        }
    }

    fn squared_norm(&self) -> f64 {
        self.len() as f64
    }
}

impl FeatureRow for Vec<f64> {
    fn dot(&self, w: &[f64]) -> f64 {
        self.iter().zip(w).map(|(a, b)| a * b).sum()
    }

    fn add_scaled(&self, w: &mut [f64], alpha: f64) {
        for (x, v) in w.iter_mut().zip(self) {
            *x += alpha * v;
        }
    }

    fn squared_norm(&self) -> f64 {
        self.iter().map(|v| v * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcdOptions {
    pub c: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for DcdOptions {
    fn default() -> Self {
        DcdOptions {
            c: 1.0,
            tol: 1e-4,
            max_sweeps: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcdTrace {
    /// Dual objective `sum alpha - 1/2 ||w||^2` after each sweep.
    pub dual_objective: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl BinarySvm {
    pub fn decision<R: FeatureRow>(&self, x: &R) -> f64 {
        x.dot(&self.weights) + self.bias
    }
}

/// Binary SVM for labels `y_i` in {+1, -1}.
pub fn train_binary_svm<R: FeatureRow>(rows: &[R], y: &[f64], features: usize, opts: &DcdOptions) -> Result<(BinarySvm, DcdTrace)> {
    if rows.is_empty() || rows.len() != y.len() {
        return Err(Error::Argument("need one +1/-1 label per non-empty row set".into()));
    }
    if !(opts.c > 0.0) {
        return Err(Error::Argument(format!("C must be positive, got {}", opts.c)));
    }
    let c = opts.c;
    let mut w = vec![0.0; features];
    let mut b = 0.0;
    let mut alpha = vec![0.0; rows.len()];
    let q: Vec<f64> = rows.iter().map(|r| r.squared_norm() + 1.0).collect();
    let mut trace = DcdTrace {
        dual_objective: Vec::new(),
        converged: false,
    };
    for _ in 0..opts.max_sweeps {
        let mut max_pg: f64 = 0.0;
        for i in 0..rows.len() {
            let g = y[i] * (rows[i].dot(&w) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg.abs());
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / q[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                rows[i].add_scaled(&mut w, step);
                b += step;
            }
        }
        let norm: f64 = w.iter().map(|v| v * v).sum::<f64>() + b * b;
        trace.dual_objective.push(alpha.iter().sum::<f64>() - 0.5 * norm);
        if max_pg <= opts.tol {
            trace.converged = true;
            break;
        }
    }
    if !trace.converged {
        log::warn!("SVM dual coordinate descent stopped after {} sweeps", opts.max_sweeps);
    }
    Ok((BinarySvm { weights: w, bias: b }, trace))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmOvo {
    pub features: usize,
    /// `(a, b, model)`: a positive decision votes for `a`.
    pub pairs: Vec<(Polarity, Polarity, BinarySvm)>,
}

pub fn train_svm_ovo<R: FeatureRow>(rows: &[R], labels: &[Polarity], features: usize, opts: &DcdOptions) -> Result<SvmOvo> {
    if rows.len() != labels.len() {
        return Err(Error::Argument("one label per row is required".into()));
    }
    for p in Polarity::ALL {
        if !labels.contains(&p) {
            return Err(Error::Config(format!("class {} is absent from the training data", p.name())));
        }
    }
    let pairs: Vec<(Polarity, Polarity)> = vec![
        (Polarity::Positive, Polarity::Neutral),
        (Polarity::Positive, Polarity::Negative),
        (Polarity::Neutral, Polarity::Negative),
    ];
    let models = pairs
        .par_iter()
        .map(|&(a, b)| {
            let idx: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == a || labels[i] == b).collect();
            let sub: Vec<&R> = idx.iter().map(|&i| &rows[i]).collect();
            let y: Vec<f64> = idx.iter().map(|&i| if labels[i] == a { 1.0 } else { -1.0 }).collect();
            train_binary_svm(&sub, &y, features, opts).map(|(m, _)| (a, b, m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmOvo { features, pairs: models })
}

impl<R: FeatureRow> FeatureRow for &R {
    fn dot(&self, w: &[f64]) -> f64 {
        (*self).dot(w)
    }

    fn add_scaled(&self, w: &mut [f64], alpha: f64) {
        (*self).add_scaled(w, alpha)
    }

    fn squared_norm(&self) -> f64 {
        (*self).squared_norm()
    }
}

impl SvmOvo {
    /// Votes and summed decision values per class.
    pub fn votes<R: FeatureRow>(&self, x: &R) -> ([u32; 3], [f64; 3]) {
        let mut votes = [0u32; 3];
        let mut sums = [0.0; 3];
        for (a, b, m) in &self.pairs {
            let f = m.decision(x);
            sums[a.code()] += f;
            sums[b.code()] -= f;
            // a decision of exactly zero goes to the lower code
            if f >= 0.0 {
                votes[a.code()] += 1;
            } else {
                votes[b.code()] += 1;
            }
        }
        (votes, sums)
    }

    /// Majority vote; tied vote counts go to the lowest label code.
    pub fn predict<R: FeatureRow>(&self, x: &R) -> Polarity {
        let (votes, _) = self.votes(x);
        let mut best = 0;
        for k in 1..3 {
            if votes[k] > votes[best] {
                best = k;
            }
        }
        Polarity::from_code(best).expect("three classes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("svm-ovo v1\nfeatures {}\n", self.features);
        for (a, b, m) in &self.pairs {
            writeln!(out, "pair {} {}", a.name(), b.name()).unwrap();
            let cells: Vec<String> = m.weights.iter().chain([&m.bias]).map(|v| v.to_string()).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}
