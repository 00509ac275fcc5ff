use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Adam hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam state over a list of parameter blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(lr: f64, params: AdamParams, block_sizes: &[usize]) -> Self {
        AdamState {
            t: 0,
            lr,
            beta1: params.beta1,
            beta2: params.beta2,
            eps: params.eps,
            m: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One update of every block. Blocks of `params` and `grads` must line up
    /// with the sizes given at construction.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[Vec<f64>]) {
        assert_eq!(params.len(), self.m.len(), "adam: block count");
        assert_eq!(grads.len(), self.m.len(), "adam: gradient block count");
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 / (1.0 - libm::pow(b1, self.t as f64));
        let c2 = 1.0 / (1.0 - libm::pow(b2, self.t as f64));
        let (lr, eps) = (self.lr, self.eps);
        for (k, p) in params.iter_mut().enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads[k]);
            assert_eq!(p.len(), g.len(), "adam: block size");
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let mh = m[i] * c1;
                let vh = v[i] * c2;
                p[i] -= lr * mh / (libm::sqrt(vh) + eps);
            }
        }
    }
}

/// Functional form: returns the updated parameters and state.
pub fn adam_step(mut params: Vec<Vec<f64>>, grads: &[Vec<f64>], mut state: AdamState) -> (Vec<Vec<f64>>, AdamState) {
    {
        let mut views: Vec<&mut [f64]> = params.iter_mut().map(|b| b.as_mut_slice()).collect();
        state.step(&mut views, grads);
    }
    (params, state)
}
