use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::Arch;
use crate::data::Dataset;
use crate::error::{check_len, config, Result};
use crate::factor::DiversifiedProjection;
use crate::matrix::{axpy, RowMatrix};
use crate::net::{dropout_in_place, DenseReluNet, Tape};
use crate::rng::{tag_seed, Rng};
use crate::train::{train, Learner, TrainConfig, TrainData, TrainReport};

/// Dropout rates tried by the dropout baselines.
pub const DROPOUT_GRID: [f64; 7] = [0.0, 0.3, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Scratch space for a plain network learner.
#[derive(Clone, Debug)]
pub struct NetScratch {
    tape: Tape,
    input: Vec<f64>,
}

impl Learner for DenseReluNet {
    type Scratch = NetScratch;

    fn scratch(&self) -> NetScratch {
        NetScratch {
            tape: self.new_tape(),
            input: vec![0.0; self.input_dim()],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.param_blocks_mut()
    }

    fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.param_blocks().iter().map(|b| vec![0.0; b.len()]).collect()
    }

    fn predict_one(&self, data: &TrainData<'_>, i: usize, s: &mut NetScratch) -> f64 {
        self.eval(data.x.row(i), &mut s.tape)[0]
    }

    fn accumulate(
        &self,
        data: &TrainData<'_>,
        i: usize,
        scale: f64,
        dropout: Option<(f64, &mut Rng)>,
        grads: &mut [Vec<f64>],
        s: &mut NetScratch,
    ) -> f64 {
        let NetScratch { tape, input } = s;
        let x = match dropout {
            Some((rate, r)) => {
                input.copy_from_slice(data.x.row(i));
                // the rate was validated by the trainer
                let _ = dropout_in_place(input, rate, r);
                &input[..]
            }
            None => data.x.row(i),
        };
        let e = self.eval(x, tape)[0] - data.y[i];
        self.backprop(tape, &[2.0 * e * scale], grads, None);
        e * e
    }

    fn after_step(&mut self, clamp: bool, _grads: &[Vec<f64>]) {
        if clamp {
            self.clamp_to_bound();
        }
    }
}

/// Network with a trainable projection as first layer: `g(p⁻¹Wᵀx)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointModel {
    /// p × r̄.
    pub w: RowMatrix,
    pub net: DenseReluNet,
}

#[derive(Clone, Debug)]
pub struct JointScratch {
    tape: Tape,
    input: Vec<f64>,
    f: Vec<f64>,
    gin: Vec<f64>,
}

impl JointModel {
    fn project(&self, x: &[f64], f: &mut [f64]) {
        f.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.w.row(j), f);
            }
        }
        let inv = 1.0 / self.w.rows as f64;
        for v in f.iter_mut() {
            *v *= inv;
        }
    }

    pub fn predict_row(&self, x: &[f64], s: &mut JointScratch) -> f64 {
        let JointScratch { tape, f, .. } = s;
        self.project(x, f);
        self.net.eval(f, tape)[0]
    }
}

impl Learner for JointModel {
    type Scratch = JointScratch;

    fn scratch(&self) -> JointScratch {
        JointScratch {
            tape: self.net.new_tape(),
            input: vec![0.0; self.w.rows],
            f: vec![0.0; self.w.cols],
            gin: vec![0.0; self.w.cols],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![&mut self.w.data];
        v.extend(self.net.param_blocks_mut());
        v
    }

    fn zero_grads(&self) -> Vec<Vec<f64>> {
        let mut v = vec![vec![0.0; self.w.data.len()]];
        v.extend(Learner::zero_grads(&self.net));
        v
    }

    fn predict_one(&self, data: &TrainData<'_>, i: usize, s: &mut JointScratch) -> f64 {
        self.predict_row(data.x.row(i), s)
    }

    fn accumulate(
        &self,
        data: &TrainData<'_>,
        i: usize,
        scale: f64,
        dropout: Option<(f64, &mut Rng)>,
        grads: &mut [Vec<f64>],
        s: &mut JointScratch,
    ) -> f64 {
        let JointScratch { tape, input, f, gin } = s;
        let x = match dropout {
            Some((rate, r)) => {
                input.copy_from_slice(data.x.row(i));
                let _ = dropout_in_place(input, rate, r);
                &input[..]
            }
            None => data.x.row(i),
        };
        self.project(x, f);
        let e = self.net.eval(f, tape)[0] - data.y[i];
        let (gw, gnet) = grads.split_at_mut(1);
        self.net.backprop(tape, &[2.0 * e * scale], gnet, Some(gin));
        let inv = 1.0 / self.w.rows as f64;
        let rbar = self.w.cols;
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj * inv, gin, &mut gw[0][j * rbar..(j + 1) * rbar]);
            }
        }
        e * e
    }

    fn after_step(&mut self, clamp: bool, _grads: &[Vec<f64>]) {
        if clamp {
            self.net.clamp_to_bound();
        }
    }
}

/// What a plain network is fed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    /// Raw covariates.
    Covariates,
    /// Factor surrogates `p⁻¹Wᵀx` from a fixed projection.
    Surrogate,
    /// True latent factors.
    Factors,
    /// True latent factors and the important idiosyncratic components.
    FactorsAndIdio,
}

/// A trained network together with its input map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetModel {
    pub input: InputKind,
    pub projection: Option<DiversifiedProjection>,
    pub net: DenseReluNet,
}

impl NetModel {
    /// Network inputs for every row of `data`.
    pub fn features(&self, data: &Dataset) -> Result<RowMatrix> {
        features(self.input, self.projection.as_ref(), data)
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        let feats = self.features(data)?;
        check_len("network input", self.net.input_dim(), feats.cols)?;
        let mut tape = self.net.new_tape();
        Ok((0..feats.rows)
            .map(|i| self.net.eval(feats.row(i), &mut tape)[0])
            .collect())
    }
}

fn features(kind: InputKind, w: Option<&DiversifiedProjection>, data: &Dataset) -> Result<RowMatrix> {
    match kind {
        InputKind::Covariates => Ok(data.x.clone()),
        InputKind::Surrogate => match w {
            Some(w) => w.surrogate_matrix(&data.x),
            None => config("surrogate input needs a projection"),
        },
        InputKind::Factors => data.oracle_inputs(false),
        InputKind::FactorsAndIdio => data.oracle_inputs(true),
    }
}

/// Seed of the trunk initialization; shared by every network estimator so
/// that estimators with the same input width start from the same weights.
pub fn init_seed(cfg: &TrainConfig) -> u64 {
    tag_seed(cfg.seed, "init")
}

fn fit_net(
    kind: InputKind,
    projection: Option<DiversifiedProjection>,
    train_set: &Dataset,
    valid_set: &Dataset,
    arch: &Arch,
    cfg: &TrainConfig,
) -> Result<(NetModel, TrainReport)> {
    let xt = features(kind, projection.as_ref(), train_set)?;
    let xv = features(kind, projection.as_ref(), valid_set)?;
    let net = arch.network(xt.cols, init_seed(cfg))?;
    let td = TrainData {
        x: &xt,
        aux: None,
        y: &train_set.y,
    };
    let vd = TrainData {
        x: &xv,
        aux: None,
        y: &valid_set.y,
    };
    let (net, report) = train(net, &td, &vd, cfg)?;
    Ok((
        NetModel {
            input: kind,
            projection,
            net,
        },
        report,
    ))
}

/// Factor-augmented network: a trunk trained on the surrogates `p⁻¹Wᵀx`.
pub fn fit_far_nn(
    train_set: &Dataset,
    valid_set: &Dataset,
    w: &DiversifiedProjection,
    arch: &Arch,
    cfg: &TrainConfig,
) -> Result<(NetModel, TrainReport)> {
    check_len("covariate columns", w.p(), train_set.dim())?;
    fit_net(InputKind::Surrogate, Some(w.clone()), train_set, valid_set, arch, cfg)
}

/// Reference networks compared against the factor-augmented estimators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Latent factors plus important idiosyncratics (factors only when
    /// there are none).
    Oracle,
    OracleFactor,
    Vanilla,
    NnJoint,
    DropoutVanilla,
    DropoutJoint,
}

impl BaselineKind {
    pub fn id(self) -> &'static str {
        match self {
            BaselineKind::Oracle => "oracle",
            BaselineKind::OracleFactor => "oracle-factor",
            BaselineKind::Vanilla => "vanilla",
            BaselineKind::NnJoint => "nn-joint",
            BaselineKind::DropoutVanilla => "dropout-vanilla",
            BaselineKind::DropoutJoint => "dropout-joint",
        }
    }

    pub fn needs_projection(self) -> bool {
        matches!(self, BaselineKind::NnJoint | BaselineKind::DropoutJoint)
    }
}

/// Either kind of baseline network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaselineModel {
    Net(NetModel),
    Joint(JointModel),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    pub model: BaselineModel,
    pub report: TrainReport,
    /// Dropout rate kept by validation (0 for the non-dropout kinds).
    pub dropout: f64,
}

/// Joint model initialized at `w` with the shared trunk initialization.
pub fn joint_init(w: &DiversifiedProjection, arch: &Arch, cfg: &TrainConfig) -> Result<JointModel> {
    Ok(JointModel {
        w: w.w.clone(),
        net: arch.network(w.rbar(), init_seed(cfg))?,
    })
}

fn fit_joint(
    train_set: &Dataset,
    valid_set: &Dataset,
    w: &DiversifiedProjection,
    arch: &Arch,
    cfg: &TrainConfig,
) -> Result<(JointModel, TrainReport)> {
    check_len("covariate columns", w.p(), train_set.dim())?;
    let model = joint_init(w, arch, cfg)?;
    let td = TrainData {
        x: &train_set.x,
        aux: None,
        y: &train_set.y,
    };
    let vd = TrainData {
        x: &valid_set.x,
        aux: None,
        y: &valid_set.y,
    };
    train(model, &td, &vd, cfg)
}

/// Fit one of the reference networks. The joint kinds need the projection
/// they start from; the dropout kinds pick their rate from `grid` by
/// validation loss.
pub fn fit_baseline_nn(
    kind: BaselineKind,
    train_set: &Dataset,
    valid_set: &Dataset,
    w: Option<&DiversifiedProjection>,
    arch: &Arch,
    cfg: &TrainConfig,
    grid: &[f64],
) -> Result<BaselineFit> {
    let one = |rate: f64| -> Result<(BaselineModel, TrainReport)> {
        let cfg = TrainConfig {
            input_dropout: rate,
            ..cfg.clone()
        };
        match kind {
            BaselineKind::Oracle => {
                let with_idio = !train_set.latent()?.important.is_empty();
                let k = if with_idio {
                    InputKind::FactorsAndIdio
                } else {
                    InputKind::Factors
                };
                let (m, r) = fit_net(k, None, train_set, valid_set, arch, &cfg)?;
                Ok((BaselineModel::Net(m), r))
            }
            BaselineKind::OracleFactor => {
                let (m, r) = fit_net(InputKind::Factors, None, train_set, valid_set, arch, &cfg)?;
                Ok((BaselineModel::Net(m), r))
            }
            BaselineKind::Vanilla | BaselineKind::DropoutVanilla => {
                let (m, r) = fit_net(InputKind::Covariates, None, train_set, valid_set, arch, &cfg)?;
                Ok((BaselineModel::Net(m), r))
            }
            BaselineKind::NnJoint | BaselineKind::DropoutJoint => {
                let Some(w) = w else {
                    return config(alloc::format!("{} needs an initial projection", kind.id()));
                };
                let (m, r) = fit_joint(train_set, valid_set, w, arch, &cfg)?;
                Ok((BaselineModel::Joint(m), r))
            }
        }
    };
    let rates: Vec<f64> = match kind {
        BaselineKind::DropoutVanilla | BaselineKind::DropoutJoint => {
            if grid.is_empty() {
                return config("dropout grid is empty");
            }
            grid.to_vec()
        }
        _ => vec![cfg.input_dropout],
    };
    let mut best: Option<BaselineFit> = None;
    for rate in rates {
        let (model, report) = one(rate)?;
        if best
            .as_ref()
            .is_none_or(|b| report.best_valid_loss < b.report.best_valid_loss)
        {
            best = Some(BaselineFit {
                model,
                report,
                dropout: rate,
            });
        }
    }
    best.ok_or_else(|| crate::error::Error::Config(String::from("no baseline fitted")))
}

impl BaselineModel {
    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        match self {
            BaselineModel::Net(m) => m.predict(data),
            BaselineModel::Joint(m) => {
                check_len("covariate columns", m.w.rows, data.dim())?;
                let mut s = m.scratch();
                Ok((0..data.len()).map(|i| m.predict_row(data.x.row(i), &mut s)).collect())
            }
        }
    }
}
