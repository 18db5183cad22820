//! Adadelta: per-coordinate step sizes from running averages of squared
//! gradients and squared updates.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Adadelta {
    pub rho: f64,
    pub eps: f64,
    accum_grad: Vec<f64>,
    accum_update: Vec<f64>,
}

impl Adadelta {
    pub fn new(len: usize, rho: f64, eps: f64) -> Self {
        Adadelta {
            rho,
            eps,
            accum_grad: vec![0.0; len],
            accum_update: vec![0.0; len],
        }
    }

    pub fn accum_grad(&self) -> &[f64] {
        &self.accum_grad
    }

    pub fn accum_update(&self) -> &[f64] {
        &self.accum_update
    }

    /// `Eg <- rho Eg + (1 - rho) g^2`, `delta = -sqrt(Eu + eps) / sqrt(Eg + eps) g`,
    /// `Eu <- rho Eu + (1 - rho) delta^2`, `param += delta`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.accum_grad.len() {
            return Err(Error::Argument(format!(
                "shape mismatch: {} params, {} grads, {} state",
                params.len(),
                grads.len(),
                self.accum_grad.len()
            )));
        }
        let (rho, eps) = (self.rho, self.eps);
        for (((p, &g), eg), eu) in params
            .iter_mut()
            .zip(grads)
            .zip(self.accum_grad.iter_mut())
            .zip(self.accum_update.iter_mut())
        {
            *eg = rho * *eg + (1.0 - rho) * g * g;
            let delta = -((*eu + eps).sqrt() / (*eg + eps).sqrt()) * g;
            *eu = rho * *eu + (1.0 - rho) * delta * delta;
            *p += delta;
        }
        Ok(())
    }
}
