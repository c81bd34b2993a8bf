//! Adam with bias correction and decoupled weight decay.

use serde::{Deserialize, Serialize};

use super::{ParamStore, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    config: AdamConfig,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamStore) -> Self {
        let first: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.value().shape())).collect();
        Self {
            config,
            second: first.clone(),
            first,
            step: 0,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update from the gradients currently held in `params`.
    ///
    /// `θ ← θ − lr·(m̂ / (√v̂ + ε) + wd·θ)`
    pub fn step(&mut self, params: &mut ParamStore) -> Result<()> {
        if params.len() != self.first.len() {
            return Err(Error::Contract(format!(
                "optimizer tracks {} parameters, store has {}",
                self.first.len(),
                params.len()
            )));
        }
        for (id, m) in params.ids().zip(&self.first) {
            if params.value(id).shape() != m.shape() {
                return Err(Error::Contract(format!(
                    "parameter {:?} shape {:?} does not match moment shape {:?}",
                    params.get(id).name(),
                    params.value(id).shape(),
                    m.shape()
                )));
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let bc1 = 1.0 - beta1.powf(self.step as f64);
        let bc2 = 1.0 - beta2.powf(self.step as f64);
        for (i, id) in params.ids().enumerate().collect::<Vec<_>>() {
            let p = params.get_mut(id);
            let grad = p.grad().data().to_vec();
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            let value = p.value_mut().data_mut();
            for k in 0..value.len() {
                let g = grad[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * g;
                v[k] = beta2 * v[k] + (1.0 - beta2) * g * g;
                let mhat = m[k] / bc1;
                let vhat = v[k] / bc2;
                value[k] -= lr * (mhat / (vhat.sqrt() + eps) + weight_decay * value[k]);
            }
        }
        Ok(())
    }
}
