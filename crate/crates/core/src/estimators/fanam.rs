use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::neural::init_seed;
use super::Arch;
use crate::data::Dataset;
use crate::error::{check_len, config, Error, Result};
use crate::factor::DiversifiedProjection;
use crate::matrix::{dot, RowMatrix};
use crate::net::{DenseReluNet, Tape};
use crate::rng::{mix, Rng};
use crate::train::{train, Learner, TrainConfig, TrainData, TrainReport};

/// `g₀(f̃) + Σ_j β_j g_j(x_j − v_jᵀf̃)` with `f̃ = p⁻¹Wᵀx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FanamModel {
    pub projection: DiversifiedProjection,
    /// p × r̄ residualizers, one row per covariate.
    pub v: RowMatrix,
    pub factor_net: DenseReluNet,
    /// One scalar network per covariate.
    pub components: Vec<DenseReluNet>,
    pub beta: Vec<f64>,
    /// Weight of the ℓ1 penalty on β.
    pub lambda: f64,
    /// Keep β at its initial value (zero) during training.
    #[serde(default)]
    pub freeze_beta: bool,
    /// Coefficients before the last optimizer step.
    #[serde(skip)]
    beta_prev: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FanamScratch {
    tape0: Tape,
    tapes: Vec<Tape>,
    h: Vec<f64>,
    gin: [f64; 1],
}

impl FanamModel {
    pub fn p(&self) -> usize {
        self.v.rows
    }

    fn factor_blocks(&self) -> usize {
        2 * self.factor_net.layers.len()
    }

    fn component_blocks(&self) -> usize {
        self.components.first().map_or(0, |c| 2 * c.layers.len())
    }

    /// Forward pass; with `all` every component is evaluated, otherwise only
    /// those with a nonzero coefficient.
    fn forward(&self, x: &[f64], f: &[f64], s: &mut FanamScratch, all: bool) -> f64 {
        let mut out = self.factor_net.eval(f, &mut s.tape0)[0];
        for j in 0..self.p() {
            let b = self.beta[j];
            if b == 0.0 && !all {
                s.h[j] = 0.0;
                continue;
            }
            let r = x[j] - dot(self.v.row(j), f);
            let h = self.components[j].eval(&[r], &mut s.tapes[j])[0];
            s.h[j] = h;
            out += b * h;
        }
        out
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        let f = self.projection.surrogate_matrix(&data.x)?;
        let mut s = self.scratch();
        Ok((0..data.len())
            .map(|i| self.forward(data.x.row(i), f.row(i), &mut s, false))
            .collect())
    }

    /// Covariates with a nonzero additive coefficient.
    pub fn active(&self) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.beta[j] != 0.0).collect()
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Learner for FanamModel {
    type Scratch = FanamScratch;

    fn scratch(&self) -> FanamScratch {
        FanamScratch {
            tape0: self.factor_net.new_tape(),
            tapes: self.components.iter().map(|c| c.new_tape()).collect(),
            h: vec![0.0; self.p()],
            gin: [0.0],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.factor_net.param_blocks_mut();
        for c in self.components.iter_mut() {
            v.extend(c.param_blocks_mut());
        }
        v.push(&mut self.v.data);
        v.push(&mut self.beta);
        v
    }

    fn zero_grads(&self) -> Vec<Vec<f64>> {
        let mut v = Learner::zero_grads(&self.factor_net);
        for c in &self.components {
            v.extend(Learner::zero_grads(c));
        }
        v.push(vec![0.0; self.v.data.len()]);
        v.push(vec![0.0; self.beta.len()]);
        v
    }

    fn predict_one(&self, data: &TrainData<'_>, i: usize, s: &mut FanamScratch) -> f64 {
        self.forward(data.x.row(i), data.aux_row(i), s, false)
    }

    fn accumulate(
        &self,
        data: &TrainData<'_>,
        i: usize,
        scale: f64,
        _dropout: Option<(f64, &mut Rng)>,
        grads: &mut [Vec<f64>],
        s: &mut FanamScratch,
    ) -> f64 {
        let x = data.x.row(i);
        let f = data.aux_row(i);
        let e = self.forward(x, f, s, !self.freeze_beta) - data.y[i];
        let d = 2.0 * e * scale;
        let n0 = self.factor_blocks();
        let nc = self.component_blocks();
        let (g0, rest) = grads.split_at_mut(n0);
        self.factor_net.backprop(&mut s.tape0, &[d], g0, None);
        let (gc, rest) = rest.split_at_mut(nc * self.p());
        let (gv, gb) = rest.split_at_mut(1);
        let rbar = self.v.cols;
        for j in 0..self.p() {
            if !self.freeze_beta {
                gb[0][j] += d * s.h[j];
            }
            let b = self.beta[j];
            if b == 0.0 {
                continue;
            }
            let blocks = &mut gc[j * nc..(j + 1) * nc];
            self.components[j].backprop(&mut s.tapes[j], &[d * b], blocks, Some(&mut s.gin));
            let gr = s.gin[0];
            if gr != 0.0 {
                for (g, &fk) in gv[0][j * rbar..(j + 1) * rbar].iter_mut().zip(f) {
                    *g -= gr * fk;
                }
            }
        }
        e * e
    }

    fn penalty(&self) -> f64 {
        self.lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn add_penalty_grad(&self, grads: &mut [Vec<f64>]) {
        if self.freeze_beta || self.lambda == 0.0 {
            return;
        }
        let gb = grads.last_mut().expect("beta block");
        for (g, &b) in gb.iter_mut().zip(&self.beta) {
            *g += self.lambda * sign(b);
        }
    }

    /// A coefficient that crosses zero is set to zero, and one at zero stays
    /// there while its data gradient is within λ, so the ℓ1 penalty yields
    /// exact zeros under the adaptive steps.
    fn after_step(&mut self, clamp: bool, grads: &[Vec<f64>]) {
        if self.freeze_beta {
            self.beta.fill(0.0);
        } else if self.lambda > 0.0 {
            let g = grads.last().expect("beta block");
            if self.beta_prev.len() != self.beta.len() {
                self.beta_prev = vec![0.0; self.beta.len()];
            }
            for j in 0..self.beta.len() {
                let prev = self.beta_prev[j];
                let b = &mut self.beta[j];
                if (prev == 0.0 && g[j].abs() <= self.lambda) || prev * *b < 0.0 {
                    *b = 0.0;
                }
            }
            self.beta_prev.copy_from_slice(&self.beta);
        }
        if clamp {
            self.factor_net.clamp_to_bound();
            for c in self.components.iter_mut() {
                c.clamp_to_bound();
            }
        }
    }
}

/// Least-squares coefficients of each covariate column on the surrogates,
/// one row per covariate.
pub fn residualizers(x: &RowMatrix, surrogates: &RowMatrix) -> Result<RowMatrix> {
    check_len("surrogate rows", x.rows, surrogates.rows)?;
    let f = surrogates.to_dmatrix();
    let mut g = f.transpose() * &f;
    let scale = (0..g.nrows()).map(|i| g[(i, i)]).fold(0.0f64, f64::max).max(1.0);
    for i in 0..g.nrows() {
        g[(i, i)] += 1e-10 * scale;
    }
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::Numeric("surrogate Gram matrix is not positive definite".into()))?;
    let rhs = f.transpose() * x.to_dmatrix();
    let coef = chol.solve(&rhs);
    Ok(RowMatrix::from_dmatrix(&coef.transpose()))
}

/// Untrained FANAM: residualizers by least squares on the training rows,
/// β = 0, factor network with the shared initialization.
pub fn fanam_init(
    train_set: &Dataset,
    w: &DiversifiedProjection,
    arch: &Arch,
    component: &Arch,
    lambda: f64,
    cfg: &TrainConfig,
) -> Result<FanamModel> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return config("FANAM lambda must be nonnegative");
    }
    check_len("covariate columns", w.p(), train_set.dim())?;
    let f = w.surrogate_matrix(&train_set.x)?;
    let seed = init_seed(cfg);
    let components = (0..w.p())
        .map(|j| component.network(1, mix(seed, j as u64 + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FanamModel {
        projection: w.clone(),
        v: residualizers(&train_set.x, &f)?,
        factor_net: arch.network(w.rbar(), seed)?,
        components,
        beta: vec![0.0; w.p()],
        lambda,
        freeze_beta: false,
        beta_prev: Vec::new(),
    })
}

pub fn fit_fanam(
    train_set: &Dataset,
    valid_set: &Dataset,
    w: &DiversifiedProjection,
    arch: &Arch,
    component: &Arch,
    lambda: f64,
    cfg: &TrainConfig,
) -> Result<(FanamModel, TrainReport)> {
    let model = fanam_init(train_set, w, arch, component, lambda, cfg)?;
    fit_fanam_from(model, train_set, valid_set, cfg)
}

/// Train an already initialized FANAM (e.g. one with `freeze_beta` set).
pub fn fit_fanam_from(
    model: FanamModel,
    train_set: &Dataset,
    valid_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<(FanamModel, TrainReport)> {
    check_len("covariate columns", model.p(), valid_set.dim())?;
    let ft = model.projection.surrogate_matrix(&train_set.x)?;
    let fv = model.projection.surrogate_matrix(&valid_set.x)?;
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
    let (mut model, report) = train(model, &td, &vd, &cfg)?;
    model.beta_prev.clear();
    Ok((model, report))
}
