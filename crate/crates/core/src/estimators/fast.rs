use alloc::vec;
use alloc::vec::Vec;
use libm::fabs;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::neural::init_seed;
use super::penalty::{clipped_l1_subgrad, ClippedL1Config};
use super::Arch;
use crate::data::Dataset;
use crate::error::{check_len, config, Result};
use crate::factor::DiversifiedProjection;
use crate::matrix::{axpy, RowMatrix};
use crate::net::{truncate, DenseReluNet, Tape};
use crate::rng::{rng, tag_seed, Rng};
use crate::train::{train, Learner, TrainConfig, TrainData, TrainReport};

/// Trunk fed the factor surrogates and the truncated selections `Θᵀx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FastNnModel {
    pub projection: DiversifiedProjection,
    /// p × N_sel variable-selection matrix.
    pub theta: RowMatrix,
    pub net: DenseReluNet,
    pub penalty: ClippedL1Config,
    /// Truncation applied to `Θᵀx`.
    #[serde(with = "crate::serde_inf")]
    pub truncation: f64,
    /// Fixed gain on the truncated selections as they enter the trunk.
    pub selection_gain: f64,
}

#[derive(Clone, Debug)]
pub struct FastScratch {
    tape: Tape,
    z: Vec<f64>,
    input: Vec<f64>,
    gin: Vec<f64>,
    gsel: Vec<f64>,
}

impl FastNnModel {
    pub fn n_sel(&self) -> usize {
        self.theta.cols
    }

    fn fill_input(&self, x: &[f64], surrogate: &[f64], s: &mut FastScratch) {
        let rbar = surrogate.len();
        s.z.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.theta.row(j), &mut s.z);
            }
        }
        s.input[..rbar].copy_from_slice(surrogate);
        for (k, &z) in s.z.iter().enumerate() {
            s.input[rbar + k] = self.selection_gain * truncate(z, self.truncation);
        }
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        let f = self.projection.surrogate_matrix(&data.x)?;
        let d = TrainData {
            x: &data.x,
            aux: Some(&f),
            y: &data.y,
        };
        let mut s = self.scratch();
        Ok((0..data.len()).map(|i| self.predict_one(&d, i, &mut s)).collect())
    }

    /// Largest |Θ| entry in each row (one score per covariate).
    pub fn row_max(&self) -> Vec<f64> {
        (0..self.theta.rows)
            .map(|j| self.theta.row(j).iter().fold(0.0f64, |m, v| m.max(fabs(*v))))
            .collect()
    }
}

impl Learner for FastNnModel {
    type Scratch = FastScratch;

    fn scratch(&self) -> FastScratch {
        FastScratch {
            tape: self.net.new_tape(),
            z: vec![0.0; self.n_sel()],
            input: vec![0.0; self.net.input_dim()],
            gin: vec![0.0; self.net.input_dim()],
            gsel: vec![0.0; self.n_sel()],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![&mut self.theta.data];
        v.extend(self.net.param_blocks_mut());
        v
    }

    fn zero_grads(&self) -> Vec<Vec<f64>> {
        let mut v = vec![vec![0.0; self.theta.data.len()]];
        v.extend(Learner::zero_grads(&self.net));
        v
    }

    fn predict_one(&self, data: &TrainData<'_>, i: usize, s: &mut FastScratch) -> f64 {
        self.fill_input(data.x.row(i), data.aux_row(i), s);
        let FastScratch { tape, input, .. } = s;
        self.net.eval(input, tape)[0]
    }

    fn accumulate(
        &self,
        data: &TrainData<'_>,
        i: usize,
        scale: f64,
        _dropout: Option<(f64, &mut Rng)>,
        grads: &mut [Vec<f64>],
        s: &mut FastScratch,
    ) -> f64 {
        let x = data.x.row(i);
        let f = data.aux_row(i);
        self.fill_input(x, f, s);
        let FastScratch {
            tape,
            z,
            input,
            gin,
            gsel,
        } = s;
        let e = self.net.eval(input, tape)[0] - data.y[i];
        let (gt, gnet) = grads.split_at_mut(1);
        self.net.backprop(tape, &[2.0 * e * scale], gnet, Some(gin));
        let rbar = f.len();
        let mut any = false;
        for (k, g) in gsel.iter_mut().enumerate() {
            *g = if fabs(z[k]) < self.truncation {
                self.selection_gain * gin[rbar + k]
            } else {
                0.0
            };
            any |= *g != 0.0;
        }
        if any {
            let n = self.n_sel();
            for (j, &xj) in x.iter().enumerate() {
                if xj != 0.0 {
                    axpy(xj, gsel, &mut gt[0][j * n..(j + 1) * n]);
                }
            }
        }
        e * e
    }

    fn penalty(&self) -> f64 {
        self.penalty.value(&self.theta.data)
    }

    fn add_penalty_grad(&self, grads: &mut [Vec<f64>]) {
        let (lambda, tau) = (self.penalty.lambda, self.penalty.tau);
        if lambda == 0.0 {
            return;
        }
        for (g, &t) in grads[0].iter_mut().zip(&self.theta.data) {
            *g += lambda * clipped_l1_subgrad(t, tau);
        }
    }

    fn after_step(&mut self, clamp: bool, _grads: &[Vec<f64>]) {
        if clamp {
            self.net.clamp_to_bound();
        }
    }
}

/// Untrained FAST-NN: Θ uniform on `[−τ/2, τ/2]`, trunk with the shared
/// initialization for input width `r̄ + n_sel`.
/// Hyperparameters of FAST-NN beyond the trunk architecture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FastNnConfig {
    pub penalty: ClippedL1Config,
    /// Number of columns of Θ.
    pub n_sel: usize,
    /// Gain on `T_M(Θᵀx)` at the trunk input.
    pub selection_gain: f64,
}

impl Default for FastNnConfig {
    fn default() -> Self {
        FastNnConfig {
            penalty: ClippedL1Config::default(),
            n_sel: 10,
            selection_gain: 10.0,
        }
    }
}

pub fn fast_nn_init(
    w: &DiversifiedProjection,
    arch: &Arch,
    fast: &FastNnConfig,
    cfg: &TrainConfig,
) -> Result<FastNnModel> {
    let (penalty, n_sel) = (fast.penalty, fast.n_sel);
    penalty.validate()?;
    if n_sel == 0 {
        return config("n_sel must be at least 1");
    }
    let gain = fast.selection_gain;
    if !(gain > 0.0 && gain.is_finite()) {
        return config("selection gain must be positive");
    }
    let mut r = rng(tag_seed(cfg.seed, "theta"));
    let h = 0.5 * penalty.tau;
    let theta = RowMatrix::from_fn(w.p(), n_sel, |_, _| r.gen_range(-h..=h));
    Ok(FastNnModel {
        projection: w.clone(),
        theta,
        net: arch.network(w.rbar() + n_sel, init_seed(cfg))?,
        penalty,
        truncation: arch.truncation,
        selection_gain: gain,
    })
}

/// Jointly train the trunk and Θ on squared error plus `λ Σ ψ_τ(Θ)`; the
/// checkpoint is chosen on penalized validation loss.
pub fn fit_fast_nn(
    train_set: &Dataset,
    valid_set: &Dataset,
    w: &DiversifiedProjection,
    arch: &Arch,
    fast: &FastNnConfig,
    cfg: &TrainConfig,
) -> Result<(FastNnModel, TrainReport)> {
    check_len("covariate columns", w.p(), train_set.dim())?;
    check_len("covariate columns", w.p(), valid_set.dim())?;
    let model = fast_nn_init(w, arch, fast, cfg)?;
    let ft = w.surrogate_matrix(&train_set.x)?;
    let fv = w.surrogate_matrix(&valid_set.x)?;
    let td = TrainData {
        x: &train_set.x,
        aux: Some(&ft),
        y: &train_set.y,
    };
    let vd = TrainData {
        x: &valid_set.x,
        aux: Some(&fv),
        y: &valid_set.y,
    };
    let cfg = TrainConfig {
        input_dropout: 0.0,
        ..cfg.clone()
    };
    train(model, &td, &vd, &cfg)
}
