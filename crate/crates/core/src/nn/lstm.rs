//! Single-layer LSTM over the true tokens of a tweet; logits from the last
//! hidden state.

use super::params::{matvec_add, matvec_t_add, outer_add, Block, Init, LayoutBuilder};
use super::Activation;
use crate::linalg::Matrix;

const I: usize = 0;
const C: usize = 1;
const F: usize = 2;
const O: usize = 3;
const GATES: [&str; 4] = ["i", "c", "f", "o"];

#[derive(Debug, Clone, PartialEq)]
pub struct LstmConfig {
    pub dim: usize,
    pub hidden: usize,
    /// Activation of the candidate cell value; `Sigmoid` follows the
    /// equation as printed in the original description.
    pub candidate: Activation,
    pub forget_bias: f64,
}

impl LstmConfig {
    pub fn new(dim: usize) -> Self {
        LstmConfig {
            dim,
            hidden: dim,
            candidate: Activation::Tanh,
            forget_bias: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LstmLayout {
    pub cfg: LstmConfig,
    w: [Block; 4],
    u: [Block; 4],
    b: [Block; 4],
    pub out_w: Block,
    pub out_b: Block,
}

pub(crate) struct Step {
    i: Vec<f64>,
    g: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

pub(crate) struct LstmTrace {
    steps: Vec<Step>,
}

impl LstmTrace {
    pub fn last_hidden(&self) -> &[f64] {
        &self.steps.last().expect("non-empty sequence").h
    }
}

impl LstmLayout {
    pub fn build(cfg: LstmConfig, lb: &mut LayoutBuilder) -> (Self, Vec<(Block, Init)>) {
        let (d, h) = (cfg.dim, cfg.hidden);
        let w = GATES.map(|g| lb.add(format!("W_{g}"), h, d));
        let u = GATES.map(|g| lb.add(format!("U_{g}"), h, h));
        let b = GATES.map(|g| lb.add(format!("b_{g}"), h, 1));
        let out_w = lb.add("out_W", 3, h);
        let out_b = lb.add("out_b", 3, 1);
        let mut inits = Vec::new();
        for k in 0..4 {
            inits.push((w[k].clone(), Init::Glorot { fan_in: d, fan_out: h }));
            inits.push((u[k].clone(), Init::Glorot { fan_in: h, fan_out: h }));
            let bias = if k == F { cfg.forget_bias } else { 0.0 };
            inits.push((b[k].clone(), Init::Constant(bias)));
        }
        inits.push((out_w.clone(), Init::Glorot { fan_in: h, fan_out: 3 }));
        inits.push((out_b.clone(), Init::Constant(0.0)));
        (
            LstmLayout {
                cfg,
                w,
                u,
                b,
                out_w,
                out_b,
            },
            inits,
        )
    }

    fn pre_activation(&self, p: &[f64], k: usize, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        let mut a = self.b[k].of(p).to_vec();
        matvec_add(self.w[k].of(p), self.cfg.dim, x, &mut a);
        matvec_add(self.u[k].of(p), self.cfg.hidden, h_prev, &mut a);
        a
    }

    fn step(&self, p: &[f64], x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Step {
        let sig = |v: Vec<f64>| v.into_iter().map(Activation::sigmoid).collect::<Vec<_>>();
        let i = sig(self.pre_activation(p, I, x, h_prev));
        let f = sig(self.pre_activation(p, F, x, h_prev));
        let o = sig(self.pre_activation(p, O, x, h_prev));
        let g: Vec<f64> = self
            .pre_activation(p, C, x, h_prev)
            .into_iter()
            .map(|a| self.cfg.candidate.apply(a))
            .collect();
        let c: Vec<f64> = (0..self.cfg.hidden).map(|j| i[j] * g[j] + f[j] * c_prev[j]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h = o.iter().zip(&tanh_c).map(|(a, b)| a * b).collect();
        Step {
            i,
            g,
            f,
            o,
            c,
            tanh_c,
            h,
        }
    }

    pub fn cell_step(&self, p: &[f64], x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let s = self.step(p, x, h_prev, c_prev);
        (s.h, s.c)
    }

    pub fn forward(&self, p: &[f64], x: &Matrix) -> LstmTrace {
        let hsz = self.cfg.hidden;
        let mut steps: Vec<Step> = Vec::with_capacity(x.rows());
        let zeros = vec![0.0; hsz];
        for t in 0..x.rows() {
            let (h_prev, c_prev) = match steps.last() {
                Some(s) => (&s.h, &s.c),
                None => (&zeros, &zeros),
            };
            let s = self.step(p, x.row(t), h_prev, c_prev);
            steps.push(s);
        }
        LstmTrace { steps }
    }

    /// Backpropagates `d_hidden` (the gradient at the last hidden state)
    /// through time into `grad`.
    pub fn backward(&self, p: &[f64], x: &Matrix, trace: &LstmTrace, d_hidden: &[f64], grad: &mut [f64]) {
        let hsz = self.cfg.hidden;
        let zeros = vec![0.0; hsz];
        let mut dh = d_hidden.to_vec();
        let mut dc_next = vec![0.0; hsz];
        for t in (0..trace.steps.len()).rev() {
            let s = &trace.steps[t];
            let (h_prev, c_prev) = if t == 0 {
                (&zeros, &zeros)
            } else {
                (&trace.steps[t - 1].h, &trace.steps[t - 1].c)
            };
            let mut da = [vec![0.0; hsz], vec![0.0; hsz], vec![0.0; hsz], vec![0.0; hsz]];
            for j in 0..hsz {
                let d_o = dh[j] * s.tanh_c[j];
                let dc = dc_next[j] + dh[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
                let di = dc * s.g[j];
                let dg = dc * s.i[j];
                let df = dc * c_prev[j];
                dc_next[j] = dc * s.f[j];
                da[I][j] = di * s.i[j] * (1.0 - s.i[j]);
                da[F][j] = df * s.f[j] * (1.0 - s.f[j]);
                da[O][j] = d_o * s.o[j] * (1.0 - s.o[j]);
                da[C][j] = dg * self.cfg.candidate.derivative_from_output(s.g[j]);
            }
            let mut dh_prev = vec![0.0; hsz];
            for k in 0..4 {
                outer_add(self.w[k].of_mut(grad), &da[k], x.row(t));
                outer_add(self.u[k].of_mut(grad), &da[k], h_prev);
                for (g, d) in self.b[k].of_mut(grad).iter_mut().zip(&da[k]) {
                    *g += d;
                }
                matvec_t_add(self.u[k].of(p), hsz, &da[k], &mut dh_prev);
            }
            dh = dh_prev;
        }
    }
}

#[cfg(test)]
pub(crate) fn hidden_states(layout: &LstmLayout, p: &[f64], x: &Matrix) -> Vec<Vec<f64>> {
    layout.forward(p, x).steps.into_iter().map(|s| s.h).collect()
}
