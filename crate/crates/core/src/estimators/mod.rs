//! Regression estimators: factor-augmented networks (FAR-NN, FAST-NN,
//! FANAM), reference networks and linear baselines.

mod fanam;
mod fast;
mod linear;
mod neural;
mod penalty;

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub use fanam::{fanam_init, fit_fanam, fit_fanam_from, residualizers, FanamModel};
pub use fast::{fast_nn_init, fit_fast_nn, FastNnConfig, FastNnModel};
pub use linear::{
    fit_farm_lite, fit_farm_lite_validated, fit_lasso, fit_lasso_validated, fit_min_l2, fit_pcr, fit_pcr_validated,
    lambda_grid, lasso_kkt_residual, lasso_lambda_max, lasso_path, soft_threshold, FittedLinear, LassoOptions,
    LinearMethod,
};
pub use neural::{
    fit_baseline_nn, fit_far_nn, init_seed, joint_init, BaselineFit, BaselineKind, BaselineModel, InputKind,
    JointModel, NetModel, DROPOUT_GRID,
};
pub use penalty::{clipped_l1, clipped_l1_subgrad, ClippedL1Config};

use crate::data::Dataset;
use crate::error::{config, Result};
use crate::net::{DenseReluNet, InitScheme};

/// Depth (hidden layers), width and output truncation of a trunk network.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Arch {
    pub depth: usize,
    pub width: usize,
    #[serde(with = "crate::serde_inf")]
    pub truncation: f64,
    /// Parameter bound used when weight clamping is enabled.
    #[serde(with = "crate::serde_inf")]
    pub weight_bound: f64,
    /// Start the output layer at zero so the untrained network predicts 0.
    pub zero_output: bool,
}

impl Default for Arch {
    fn default() -> Self {
        Arch {
            depth: 4,
            width: 64,
            truncation: 100.0,
            weight_bound: f64::INFINITY,
            zero_output: true,
        }
    }
}

impl Arch {
    /// Small per-covariate networks used inside FANAM.
    pub fn component() -> Self {
        Arch {
            depth: 2,
            width: 8,
            zero_output: false,
            ..Arch::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return config("network width must be positive");
        }
        if !(self.truncation > 0.0) {
            return config("truncation level must be positive");
        }
        if !(self.weight_bound > 0.0) {
            return config("weight bound must be positive");
        }
        Ok(())
    }

    /// Seeded scalar-output network on `input` features.
    pub fn network(&self, input: usize, seed: u64) -> Result<DenseReluNet> {
        self.validate()?;
        let mut widths = vec![input];
        widths.extend(core::iter::repeat_n(self.width, self.depth));
        widths.push(1);
        let mut net = DenseReluNet::init(&widths, seed, InitScheme::FanInUniform)?.with_truncation(self.truncation);
        net.weight_bound = self.weight_bound;
        if self.zero_output {
            net.layers.last_mut().expect("output layer").weights.fill(0.0);
        }
        Ok(net)
    }
}

/// Any fitted estimator, serializable as a self-describing JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum FittedModel {
    Net(NetModel),
    Joint(JointModel),
    Fast(FastNnModel),
    Fanam(FanamModel),
    Linear(FittedLinear),
}

impl From<BaselineModel> for FittedModel {
    fn from(m: BaselineModel) -> Self {
        match m {
            BaselineModel::Net(m) => FittedModel::Net(m),
            BaselineModel::Joint(m) => FittedModel::Joint(m),
        }
    }
}

impl FittedModel {
    /// Number of covariates the model expects.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            FittedModel::Net(m) => match m.input {
                InputKind::Covariates => Some(m.net.input_dim()),
                InputKind::Surrogate => m.projection.as_ref().map(|w| w.p()),
                InputKind::Factors | InputKind::FactorsAndIdio => None,
            },
            FittedModel::Joint(m) => Some(m.w.rows),
            FittedModel::Fast(m) => Some(m.projection.p()),
            FittedModel::Fanam(m) => Some(m.p()),
            FittedModel::Linear(m) => Some(m.beta.len()),
        }
    }

    /// True for oracle networks, which read the latent truth.
    pub fn needs_latent(&self) -> bool {
        matches!(
            self,
            FittedModel::Net(NetModel {
                input: InputKind::Factors | InputKind::FactorsAndIdio,
                ..
            })
        )
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<f64>> {
        if let Some(p) = self.input_dim() {
            crate::error::check_len("covariate columns", p, data.dim())?;
        }
        match self {
            FittedModel::Net(m) => m.predict(data),
            FittedModel::Joint(m) => BaselineModel::Joint(m.clone()).predict(data),
            FittedModel::Fast(m) => m.predict(data),
            FittedModel::Fanam(m) => m.predict(data),
            FittedModel::Linear(m) => m.predict(&data.x),
        }
    }
}
