//! Mini-batch training with early stopping on dev accuracy.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::{Adadelta, Example, Network};
use crate::error::{Error, Result};
use crate::rng::{stream, SeededRng};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub rho: f64,
    pub eps: f64,
    pub max_epochs: usize,
    /// Epochs without a strict dev-accuracy improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 50,
            dropout_rate: 0.5,
            rho: 0.95,
            eps: 1e-6,
            max_epochs: 25,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout_rate {} outside [0, 1)", self.dropout_rate)));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) || self.eps <= 0.0 {
            return Err(Error::Config("Adadelta needs 0 < rho < 1 and eps > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best dev accuracy.
    pub network: Network,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Inverted-dropout multipliers for one example: 0 with probability `rate`,
/// otherwise `1 / (1 - rate)`. Drawn from a stream keyed by
/// `(epoch, batch, example)` so masks do not depend on evaluation order.
pub fn dropout_mask(size: usize, rate: f64, seed: u64, epoch: u64, batch: u64, example: u64) -> Vec<f64> {
    let mut rng = SeededRng::derived(seed, stream::DROPOUT, &[epoch, batch, example]);
    let keep = 1.0 / (1.0 - rate);
    (0..size)
        .map(|_| if rng.next_f64() < rate { 0.0 } else { keep })
        .collect()
}

pub fn accuracy(network: &Network, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Argument("no examples to score".into()));
    }
    let hits: Vec<bool> = examples
        .par_iter()
        .map(|ex| network.classify(&ex.input).map(|(p, _)| p == ex.label))
        .collect::<Result<_>>()?;
    Ok(hits.iter().filter(|&&h| h).count() as f64 / examples.len() as f64)
}

pub fn train(mut network: Network, train: &[Example], dev: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Argument("training and dev sets must be non-empty".into()));
    }
    let mut opt = Adadelta::new(network.param_count(), cfg.rho, cfg.eps);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut since_best = 0;
    let width = network.penultimate_size();

    for epoch in 1..=cfg.max_epochs {
        SeededRng::derived(cfg.seed, stream::EPOCH_SHUFFLE, &[epoch as u64]).shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Example> = idx.iter().map(|&i| &train[i]).collect();
            let masks: Option<Vec<Vec<f64>>> = (cfg.dropout_rate > 0.0).then(|| {
                (0..batch.len())
                    .map(|j| dropout_mask(width, cfg.dropout_rate, cfg.seed, epoch as u64, b as u64, j as u64))
                    .collect()
            });
            let (loss, grad) = network.loss_and_gradients(&batch, masks.as_deref())?;
            loss_sum += loss * batch.len() as f64;
            opt.step(network.params_mut(), &grad)?;
        }
        let dev_accuracy = accuracy(&network, dev)?;
        let train_loss = loss_sum / train.len() as f64;
        log::debug!("epoch {epoch}: train loss {train_loss:.6}, dev accuracy {dev_accuracy:.4}");
        history.push(EpochStats {
            epoch,
            train_loss,
            dev_accuracy,
        });
        if best.as_ref().is_none_or(|(acc, _, _)| dev_accuracy > *acc) {
            best = Some((dev_accuracy, epoch, network.params().to_vec()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= cfg.patience {
            break;
        }
    }
    let (_, best_epoch, params) = best.expect("at least one epoch");
    network.params_mut().copy_from_slice(&params);
    Ok(TrainOutcome {
        network,
        history,
        best_epoch,
    })
}

/// `epoch,train_loss,dev_accuracy` with a header row.
pub fn training_log_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,dev_accuracy\n");
    for h in history {
        writeln!(out, "{},{},{}", h.epoch, h.train_loss, h.dev_accuracy).unwrap();
    }
    out
}
