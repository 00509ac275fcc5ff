//! Mini-batch Adam training with validation-based checkpoint selection,
//! shared by every neural estimator.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::matrix::RowMatrix;
use crate::optim::{AdamParams, AdamState};
use crate::rng::{rng, tag_seed, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Input dropout rate ρ in [0, 1).
    pub input_dropout: f64,
    /// Return the checkpoint with the smallest validation loss instead of the last one.
    pub early_stopping: bool,
    pub seed: u64,
    /// Clamp network parameters into [-B, B] after each step (when B is finite).
    pub clamp_weights: bool,
    pub adam: AdamParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            lr: 1e-3,
            input_dropout: 0.0,
            early_stopping: true,
            seed: 0,
            clamp_weights: false,
            adam: AdamParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return config("batch_size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.input_dropout) {
            return config("input_dropout must lie in [0, 1)");
        }
        if !(self.lr > 0.0) {
            return config("lr must be positive");
        }
        let a = &self.adam;
        if !(a.beta1 > 0.0 && a.beta1 < 1.0 && a.beta2 > 0.0 && a.beta2 < 1.0 && a.eps > 0.0) {
            return config("adam betas must lie in (0, 1) and eps must be positive");
        }
        Ok(())
    }
}

/// Training rows: raw covariates, an optional per-row auxiliary matrix
/// (e.g. precomputed factor surrogates) and the responses.
#[derive(Clone, Copy, Debug)]
pub struct TrainData<'a> {
    pub x: &'a RowMatrix,
    pub aux: Option<&'a RowMatrix>,
    pub y: &'a [f64],
}

impl<'a> TrainData<'a> {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub(crate) fn aux_row(&self, i: usize) -> &'a [f64] {
        self.aux.expect("learner needs auxiliary features").row(i)
    }
}

/// A model trainable by [`train`]. Gradients are flat blocks lining up with
/// `params_mut`.
pub trait Learner: Clone {
    type Scratch;

    fn scratch(&self) -> Self::Scratch;

    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    fn zero_grads(&self) -> Vec<Vec<f64>>;

    fn predict_one(&self, data: &TrainData<'_>, i: usize, s: &mut Self::Scratch) -> f64;

    /// Add `scale · ∂(pred_i − y_i)²/∂θ` to `grads` and return `(pred_i − y_i)²`.
    /// `dropout` carries the rate and generator when input dropout is active.
    fn accumulate(
        &self,
        data: &TrainData<'_>,
        i: usize,
        scale: f64,
        dropout: Option<(f64, &mut Rng)>,
        grads: &mut [Vec<f64>],
        s: &mut Self::Scratch,
    ) -> f64;

    fn penalty(&self) -> f64 {
        0.0
    }

    fn add_penalty_grad(&self, _grads: &mut [Vec<f64>]) {}

    /// Called after each optimizer step with the gradients that drove it.
    fn after_step(&mut self, _clamp: bool, _grads: &[Vec<f64>]) {}
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// 0 means the initial parameters were kept.
    pub best_epoch: usize,
    pub best_valid_loss: f64,
    pub initial_valid_loss: f64,
    pub final_valid_loss: f64,
    pub valid_history: Vec<f64>,
    pub steps: u64,
}

/// Validation criterion: mean squared error plus the model's penalty.
pub fn validation_loss<L: Learner>(model: &L, valid: &TrainData<'_>, s: &mut L::Scratch) -> f64 {
    let mut sse = 0.0;
    for i in 0..valid.len() {
        let e = model.predict_one(valid, i, s) - valid.y[i];
        sse += e * e;
    }
    sse / valid.len() as f64 + model.penalty()
}

pub fn train<L: Learner>(
    mut model: L,
    train: &TrainData<'_>,
    valid: &TrainData<'_>,
    cfg: &TrainConfig,
) -> Result<(L, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() || valid.is_empty() {
        return config("training and validation sets must be nonempty");
    }
    let mut r = rng(tag_seed(cfg.seed, "minibatch"));
    let mut grads = model.zero_grads();
    let sizes: Vec<usize> = grads.iter().map(|g| g.len()).collect();
    let mut adam = AdamState::new(cfg.lr, cfg.adam, &sizes);
    let mut s = model.scratch();

    let initial = validation_loss(&model, valid, &mut s);
    let mut best = (model.clone(), initial, 0usize);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut r);
        for batch in order.chunks(cfg.batch_size) {
            for g in grads.iter_mut() {
                g.fill(0.0);
            }
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let d = if cfg.input_dropout > 0.0 {
                    Some((cfg.input_dropout, &mut r))
                } else {
                    None
                };
                model.accumulate(train, i, scale, d, &mut grads, &mut s);
            }
            model.add_penalty_grad(&mut grads);
            adam.step(&mut model.params_mut(), &grads);
            model.after_step(cfg.clamp_weights, &grads);
        }
        let vl = validation_loss(&model, valid, &mut s);
        history.push(vl);
        if vl < best.1 {
            best = (model.clone(), vl, epoch);
        }
    }
    let final_loss = history.last().copied().unwrap_or(initial);
    let report = TrainReport {
        best_epoch: if cfg.early_stopping { best.2 } else { cfg.epochs },
        best_valid_loss: if cfg.early_stopping { best.1 } else { final_loss },
        initial_valid_loss: initial,
        final_valid_loss: final_loss,
        valid_history: history,
        steps: adam.t,
    };
    let out = if cfg.early_stopping { best.0 } else { model };
    Ok((out, report))
}
