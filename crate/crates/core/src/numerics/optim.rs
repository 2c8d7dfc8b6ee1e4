use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::param::ParamStore;
use super::real::Real;
use super::tensor::Tensor;

/// Hyperparameters of the decoupled-weight-decay Adam update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-2,
        }
    }
}

/// Moment estimates and step counter for every parameter of a store.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW<R> {
    pub config: AdamWConfig,
    step: u64,
    first: Vec<Tensor<R>>,
    second: Vec<Tensor<R>>,
}

impl<R: Real> AdamW<R> {
    pub fn new(config: AdamWConfig, store: &ParamStore<R>) -> Self {
        let zeros = || store.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        AdamW {
            config,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, index: usize) -> &Tensor<R> {
        &self.first[index]
    }

    pub fn second_moment(&self, index: usize) -> &Tensor<R> {
        &self.second[index]
    }

    /// One update over every trainable parameter:
    ///
    /// ```text
    /// w ← w − η·λ·w
    /// m ← β1·m + (1 − β1)·g        v ← β2·v + (1 − β2)·g²
    /// w ← w − η · (m / (1 − β1^t)) / (√(v / (1 − β2^t)) + ε)
    /// ```
    ///
    /// Parameters with `trainable == false` and their moments are left
    /// untouched. The step counter advances regardless.
    pub fn step(&mut self, store: &mut ParamStore<R>) {
        assert_eq!(self.first.len(), store.len(), "optimizer built for a different store");
        self.step += 1;
        let c = self.config;
        let lr = R::of(c.learning_rate);
        let b1 = R::of(c.beta1);
        let b2 = R::of(c.beta2);
        let eps = R::of(c.epsilon);
        let decay = R::one() - R::of(c.learning_rate * c.weight_decay);
        let t = self.step as i32;
        let bias1 = R::one() - R::of(num_traits::Float::powi(c.beta1, t));
        let bias2 = R::one() - R::of(num_traits::Float::powi(c.beta2, t));
        for (idx, p) in store.iter_mut().enumerate() {
            if !p.trainable {
                continue;
            }
            let m = self.first[idx].data_mut();
            let v = self.second[idx].data_mut();
            let grads = p.grad.data();
            for (k, w) in p.value.data_mut().iter_mut().enumerate() {
                let g = grads[k];
                m[k] = b1 * m[k] + (R::one() - b1) * g;
                v[k] = b2 * v[k] + (R::one() - b2) * g * g;
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                *w = *w * decay - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
