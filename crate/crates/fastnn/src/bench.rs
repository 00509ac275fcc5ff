//! Monte-Carlo experiment runners: plans, per-trial fitting, records and
//! aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use fastnn_core::estimators::{
    fit_baseline_nn, fit_fanam, fit_far_nn, fit_farm_lite_validated, fit_fast_nn, fit_lasso_validated, fit_min_l2,
    fit_pcr_validated, Arch, BaselineKind, FastNnConfig, FastNnModel, FittedModel, LassoOptions, DROPOUT_GRID,
};
use fastnn_core::factor::{estimate_dpm_pca, DgpSpec, DiversifiedProjection, FactorDgp, FastKind};
use fastnn_core::metrics::eval_mse;
use fastnn_core::rng::{tag_seed, trial_seed};
use fastnn_core::train::TrainConfig;
use fastnn_core::{Dataset, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliError, CliResult};
use crate::realdata::{run_real_data, RealDataSpec};

/// Version of the results CSV and summary JSON layouts.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    Exp1,
    Exp2,
    Exp3,
    FastSim,
    FanamSim,
    NullCase,
    RealData,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::Exp1,
        ExperimentId::Exp2,
        ExperimentId::Exp3,
        ExperimentId::FastSim,
        ExperimentId::FanamSim,
        ExperimentId::NullCase,
        ExperimentId::RealData,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExperimentId::Exp1 => "exp1",
            ExperimentId::Exp2 => "exp2",
            ExperimentId::Exp3 => "exp3",
            ExperimentId::FastSim => "fast-sim",
            ExperimentId::FanamSim => "fanam-sim",
            ExperimentId::NullCase => "null-case",
            ExperimentId::RealData => "real-data",
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorId {
    Oracle,
    OracleFactor,
    FarNn,
    Vanilla,
    NnJoint,
    DropoutVanilla,
    DropoutJoint,
    FastNn,
    Fanam,
    Lasso,
    Pcr,
    #[serde(rename = "min-l2")]
    MinL2,
    FarmLite,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 13] = [
        EstimatorId::Oracle,
        EstimatorId::OracleFactor,
        EstimatorId::FarNn,
        EstimatorId::Vanilla,
        EstimatorId::NnJoint,
        EstimatorId::DropoutVanilla,
        EstimatorId::DropoutJoint,
        EstimatorId::FastNn,
        EstimatorId::Fanam,
        EstimatorId::Lasso,
        EstimatorId::Pcr,
        EstimatorId::MinL2,
        EstimatorId::FarmLite,
    ];

    pub fn id(self) -> &'static str {
        match self {
            EstimatorId::Oracle => "oracle",
            EstimatorId::OracleFactor => "oracle-factor",
            EstimatorId::FarNn => "far-nn",
            EstimatorId::Vanilla => "vanilla",
            EstimatorId::NnJoint => "nn-joint",
            EstimatorId::DropoutVanilla => "dropout-vanilla",
            EstimatorId::DropoutJoint => "dropout-joint",
            EstimatorId::FastNn => "fast-nn",
            EstimatorId::Fanam => "fanam",
            EstimatorId::Lasso => "lasso",
            EstimatorId::Pcr => "pcr",
            EstimatorId::MinL2 => "min-l2",
            EstimatorId::FarmLite => "farm-lite",
        }
    }

    /// Estimators that read the diversified projection.
    pub fn uses_projection(self) -> bool {
        matches!(
            self,
            EstimatorId::FarNn
                | EstimatorId::NnJoint
                | EstimatorId::DropoutJoint
                | EstimatorId::FastNn
                | EstimatorId::Fanam
        )
    }

    /// Estimators that read latent factors and can only run on simulated data.
    pub fn needs_latent(self) -> bool {
        matches!(self, EstimatorId::Oracle | EstimatorId::OracleFactor)
    }

    fn baseline(self) -> Option<BaselineKind> {
        Some(match self {
            EstimatorId::Oracle => BaselineKind::Oracle,
            EstimatorId::OracleFactor => BaselineKind::OracleFactor,
            EstimatorId::Vanilla => BaselineKind::Vanilla,
            EstimatorId::NnJoint => BaselineKind::NnJoint,
            EstimatorId::DropoutVanilla => BaselineKind::DropoutVanilla,
            EstimatorId::DropoutJoint => BaselineKind::DropoutJoint,
            _ => return None,
        })
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EstimatorId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        EstimatorId::ALL.into_iter().find(|e| e.id() == s).ok_or_else(|| {
            let names: Vec<_> = EstimatorId::ALL.iter().map(|e| e.id()).collect();
            format!("unknown estimator `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Everything a run needs; serialized as the TOML config and its echo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub p: Vec<usize>,
    pub trials: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub n_test: usize,
    /// Unlabeled sample sizes for the projection; more than one value sweeps them.
    pub n_unlabeled: Vec<usize>,
    /// Number of diversified weights, capped by the unlabeled sample size.
    pub rbar: usize,
    pub estimators: Vec<EstimatorId>,
    /// Regression function of the FAST simulation.
    pub fast_kind: FastKind,
    /// Noise variance override for the simulated design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_var: Option<f64>,
    pub fanam_lambda: f64,
    pub dropout_grid: Vec<f64>,
    /// Largest number of principal components tried by PCR and farm-lite.
    pub max_components: usize,
    /// Covariate columns in the Θ heat-data export (0 disables it).
    pub heat_cols: usize,
    pub arch: Arch,
    pub component: Arch,
    pub train: TrainConfig,
    pub fast: FastNnConfig,
    /// Penalty weights tried by FAST-NN on real data, chosen on validation MSE.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fast_lambda_grid: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<RealDataSpec>,
}

fn paper_p_grid() -> Vec<usize> {
    let mut v: Vec<usize> = (1..=10).map(|k| 100 * k).collect();
    v.extend([2000, 3000, 4000]);
    v
}

impl ExperimentPlan {
    /// Desk-scale defaults, or the published scale with `paper_scale`.
    pub fn defaults(experiment: ExperimentId, paper_scale: bool) -> Self {
        use EstimatorId::*;
        let mut plan = ExperimentPlan {
            experiment,
            seed: 0,
            p: vec![100, 500, 1000],
            trials: 20,
            n_train: 500,
            n_valid: 150,
            n_test: 10_000,
            n_unlabeled: vec![50],
            rbar: 10,
            estimators: vec![Oracle, FarNn, Vanilla, NnJoint],
            fast_kind: FastKind::Linear,
            noise_var: None,
            fanam_lambda: 0.1,
            dropout_grid: DROPOUT_GRID.to_vec(),
            max_components: 10,
            heat_cols: 0,
            arch: Arch::default(),
            component: Arch::component(),
            train: TrainConfig::default(),
            fast: FastNnConfig::default(),
            fast_lambda_grid: Vec::new(),
            data: None,
        };
        match experiment {
            ExperimentId::Exp1 => {}
            ExperimentId::Exp2 => plan.estimators = vec![Oracle, FarNn, DropoutVanilla, DropoutJoint],
            ExperimentId::Exp3 => {
                plan.n_unlabeled = vec![4, 8, 16, 64];
                plan.estimators = vec![FarNn];
            }
            ExperimentId::FastSim => {
                plan.n_train = 1000;
                plan.n_valid = 300;
                plan.n_unlabeled = vec![100];
                plan.estimators = vec![Oracle, OracleFactor, FastNn];
                plan.heat_cols = 40;
            }
            ExperimentId::FanamSim => {
                plan.p = vec![100, 500];
                plan.estimators = vec![Fanam, FarNn, Pcr, Lasso, FarmLite];
            }
            ExperimentId::NullCase => {
                plan.p = vec![400];
                plan.trials = 50;
                plan.n_train = 200;
                plan.n_valid = 60;
                plan.n_unlabeled = vec![20];
                plan.estimators = vec![MinL2, FarNn];
            }
            ExperimentId::RealData => {
                plan.p = Vec::new();
                plan.trials = 30;
                plan.n_unlabeled = Vec::new();
                plan.rbar = 5;
                plan.estimators = vec![FastNn, Lasso, Pcr, FarmLite];
                plan.arch.depth = 3;
                plan.arch.width = 32;
                plan.fast.penalty.tau = 0.1;
                plan.fast_lambda_grid = vec![1e-4, 1e-3, 1e-2, 1e-1];
                plan.data = Some(RealDataSpec::default());
            }
        }
        if paper_scale {
            plan.arch.width = 300;
            plan.train.epochs = 200;
            plan.train.lr = 1e-4;
            if experiment != ExperimentId::RealData {
                plan.n_test = 100_000;
                plan.trials = 200;
                plan.p = match experiment {
                    ExperimentId::Exp3 => vec![100, 500, 1000, 5000],
                    ExperimentId::NullCase => vec![400],
                    _ => paper_p_grid(),
                };
            } else {
                plan.arch.width = 32;
            }
        }
        plan
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.trials == 0 {
            return config_err("trials must be at least 1");
        }
        if self.estimators.is_empty() {
            return config_err("estimator roster is empty");
        }
        // TOML integers are signed 64-bit
        if self.seed > i64::MAX as u64 {
            return config_err(format!("seed must be at most {}", i64::MAX));
        }
        self.arch.validate()?;
        self.component.validate()?;
        self.train.validate()?;
        self.fast.penalty.validate()?;
        if self.fast.n_sel == 0 {
            return config_err("fast.n_sel must be at least 1");
        }
        if !(self.fanam_lambda >= 0.0) {
            return config_err("fanam_lambda must be nonnegative");
        }
        if self.dropout_grid.iter().any(|r| !(0.0..1.0).contains(r)) {
            return config_err("dropout rates must lie in [0, 1)");
        }
        if self.experiment == ExperimentId::RealData {
            let Some(d) = &self.data else {
                return config_err("real-data plan needs a [data] section");
            };
            d.validate()?;
            if let Some(e) = self.estimators.iter().find(|e| e.needs_latent()) {
                return config_err(format!(
                    "estimator {e} needs latent factors and cannot run on real data"
                ));
            }
            return Ok(());
        }
        if self.p.is_empty() || self.p.contains(&0) {
            return config_err("p grid must be nonempty with positive entries");
        }
        if self.n_unlabeled.is_empty() || self.n_unlabeled.contains(&0) {
            return config_err("n_unlabeled grid must be nonempty with positive entries");
        }
        if self.n_train == 0 || self.n_valid == 0 || self.n_test == 0 {
            return config_err("n_train, n_valid and n_test must be positive");
        }
        if self.rbar == 0 {
            return config_err("rbar must be positive");
        }
        Ok(())
    }

    /// Simulated design at ambient dimension `p`.
    pub fn dgp_spec(&self, p: usize) -> DgpSpec {
        let mut spec = match self.experiment {
            ExperimentId::FastSim => DgpSpec::fast(p, self.fast_kind),
            ExperimentId::FanamSim => DgpSpec::fanam(p),
            ExperimentId::NullCase => DgpSpec::null_case(p),
            _ => DgpSpec::additive(p),
        };
        if let Some(v) = self.noise_var {
            spec.noise_var = v;
        }
        spec
    }

    pub fn fit_settings(&self) -> FitSettings {
        FitSettings {
            arch: self.arch,
            component: self.component,
            train: self.train.clone(),
            fast: self.fast,
            fast_lambda_grid: self.fast_lambda_grid.clone(),
            fanam_lambda: self.fanam_lambda,
            dropout_grid: self.dropout_grid.clone(),
            max_components: self.max_components,
        }
    }
}

/// Hyperparameters shared by every fit in a run.
#[derive(Clone, Debug, PartialEq)]
pub struct FitSettings {
    pub arch: Arch,
    pub component: Arch,
    pub train: TrainConfig,
    pub fast: FastNnConfig,
    pub fast_lambda_grid: Vec<f64>,
    pub fanam_lambda: f64,
    pub dropout_grid: Vec<f64>,
    pub max_components: usize,
}

impl FitSettings {
    /// `key=value` pairs describing what `est` was fitted with.
    pub fn echo(&self, est: EstimatorId) -> String {
        let a = &self.arch;
        let t = &self.train;
        let net = format!(
            "depth={};width={};truncation={};epochs={};batch={};lr={};adam={}/{}/{}",
            a.depth, a.width, a.truncation, t.epochs, t.batch_size, t.lr, t.adam.beta1, t.adam.beta2, t.adam.eps
        );
        match est {
            EstimatorId::FastNn => {
                let lam = if self.fast_lambda_grid.is_empty() {
                    self.fast.penalty.lambda.to_string()
                } else {
                    let g: Vec<String> = self.fast_lambda_grid.iter().map(|l| l.to_string()).collect();
                    g.join("/")
                };
                format!(
                    "{net};lambda={lam};tau={};n_sel={};gain={}",
                    self.fast.penalty.tau, self.fast.n_sel, self.fast.selection_gain
                )
            }
            EstimatorId::Fanam => format!(
                "{net};lambda={};component_depth={};component_width={}",
                self.fanam_lambda, self.component.depth, self.component.width
            ),
            EstimatorId::DropoutVanilla | EstimatorId::DropoutJoint => {
                let g: Vec<String> = self.dropout_grid.iter().map(|r| r.to_string()).collect();
                format!("{net};dropout_grid={}", g.join("/"))
            }
            EstimatorId::Lasso => "standardize=true;lambda_grid=20".into(),
            EstimatorId::Pcr => format!("max_components={}", self.max_components),
            EstimatorId::FarmLite => format!("max_components={};lambda_grid=10", self.max_components),
            EstimatorId::MinL2 => String::new(),
            _ => net,
        }
    }
}

/// A fitted estimator with what model selection chose.
#[derive(Clone, Debug, PartialEq)]
pub struct Fitted {
    pub model: FittedModel,
    pub best_epoch: Option<usize>,
    pub dropout: Option<f64>,
    pub lambda: Option<f64>,
}

fn need_w(w: Option<&DiversifiedProjection>) -> Result<&DiversifiedProjection> {
    w.ok_or_else(|| Error::Config("estimator needs a diversified projection".into()))
}

fn fit_fast(
    train: &Dataset,
    valid: &Dataset,
    w: &DiversifiedProjection,
    s: &FitSettings,
) -> Result<(FastNnModel, usize, f64)> {
    if s.fast_lambda_grid.is_empty() {
        let (m, rep) = fit_fast_nn(train, valid, w, &s.arch, &s.fast, &s.train)?;
        return Ok((m, rep.best_epoch, s.fast.penalty.lambda));
    }
    let mut best: Option<(f64, FastNnModel, usize, f64)> = None;
    for &lambda in &s.fast_lambda_grid {
        let mut cfg = s.fast;
        cfg.penalty.lambda = lambda;
        let (m, rep) = fit_fast_nn(train, valid, w, &s.arch, &cfg, &s.train)?;
        let err = eval_mse(&m.predict(valid)?, &valid.y)?;
        if best.as_ref().is_none_or(|b| err < b.0) {
            best = Some((err, m, rep.best_epoch, lambda));
        }
    }
    let (_, m, e, l) = best.expect("nonempty grid");
    Ok((m, e, l))
}

/// Fit one estimator on a train/validation split.
pub fn fit_estimator(
    est: EstimatorId,
    train: &Dataset,
    valid: &Dataset,
    w: Option<&DiversifiedProjection>,
    s: &FitSettings,
) -> Result<Fitted> {
    let plain = |model| Fitted {
        model,
        best_epoch: None,
        dropout: None,
        lambda: None,
    };
    let lasso = LassoOptions::default();
    Ok(match est {
        EstimatorId::FarNn => {
            let (m, rep) = fit_far_nn(train, valid, need_w(w)?, &s.arch, &s.train)?;
            Fitted {
                best_epoch: Some(rep.best_epoch),
                ..plain(FittedModel::Net(m))
            }
        }
        EstimatorId::FastNn => {
            let (m, epoch, lambda) = fit_fast(train, valid, need_w(w)?, s)?;
            Fitted {
                best_epoch: Some(epoch),
                lambda: Some(lambda),
                ..plain(FittedModel::Fast(m))
            }
        }
        EstimatorId::Fanam => {
            let (m, rep) = fit_fanam(
                train,
                valid,
                need_w(w)?,
                &s.arch,
                &s.component,
                s.fanam_lambda,
                &s.train,
            )?;
            Fitted {
                best_epoch: Some(rep.best_epoch),
                lambda: Some(s.fanam_lambda),
                ..plain(FittedModel::Fanam(m))
            }
        }
        EstimatorId::Lasso => {
            let f = fit_lasso_validated(train, valid, &lasso)?;
            let l = f.lambda;
            Fitted {
                lambda: Some(l),
                ..plain(FittedModel::Linear(f))
            }
        }
        EstimatorId::Pcr => plain(FittedModel::Linear(fit_pcr_validated(train, valid, s.max_components)?)),
        EstimatorId::FarmLite => {
            let f = fit_farm_lite_validated(train, valid, s.max_components, &lasso)?;
            let l = f.lambda;
            Fitted {
                lambda: Some(l),
                ..plain(FittedModel::Linear(f))
            }
        }
        EstimatorId::MinL2 => plain(FittedModel::Linear(fit_min_l2(&train.x, &train.y)?)),
        other => {
            let kind = other.baseline().expect("neural baseline");
            let w = if kind.needs_projection() {
                Some(need_w(w)?)
            } else {
                None
            };
            let fit = fit_baseline_nn(kind, train, valid, w, &s.arch, &s.train, &s.dropout_grid)?;
            Fitted {
                best_epoch: Some(fit.report.best_epoch),
                dropout: matches!(kind, BaselineKind::DropoutVanilla | BaselineKind::DropoutJoint)
                    .then_some(fit.dropout),
                ..plain(fit.model.into())
            }
        }
    })
}

/// One Monte-Carlo trial of one estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub schema_version: u32,
    pub experiment: ExperimentId,
    pub estimator: EstimatorId,
    pub p: usize,
    /// Unlabeled rows used for the projection.
    pub n1: usize,
    pub trial: usize,
    pub seed: u64,
    /// `mse` against the latent truth, or `r2_oos` on real data.
    pub metric: String,
    pub value: Option<f64>,
    pub best_epoch: Option<usize>,
    pub dropout: Option<f64>,
    pub lambda: Option<f64>,
    /// FAST-NN: true coordinates whose Θ row-max beats the null 95th percentile.
    pub selection_hits: Option<usize>,
    /// FANAM: covariates with a nonzero additive coefficient.
    pub active: Option<usize>,
    pub status: String,
    pub error: String,
    pub hyper: String,
}

impl TrialRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Wall time of one record, kept apart so the results stay reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub experiment: ExperimentId,
    pub estimator: EstimatorId,
    pub p: usize,
    pub n1: usize,
    pub trial: usize,
    pub seconds: f64,
}

/// log10|Θᵀ| for the leading covariates, rows ordered by their largest entry.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatTable {
    /// Column of Θ behind each row.
    pub theta_column: Vec<usize>,
    /// `None` where the entry is exactly zero.
    pub cells: Vec<Vec<Option<f64>>>,
}

pub fn export_theta_heatdata(model: &FastNnModel, top_cols: usize) -> HeatTable {
    let theta = &model.theta;
    let cols = top_cols.min(theta.rows);
    let row_max: Vec<f64> = (0..theta.cols)
        .map(|k| (0..theta.rows).map(|j| theta.get(j, k).abs()).fold(0.0, f64::max))
        .collect();
    let mut order: Vec<usize> = (0..theta.cols).collect();
    order.sort_by(|&a, &b| row_max[b].total_cmp(&row_max[a]));
    let cells = order
        .iter()
        .map(|&k| {
            (0..cols)
                .map(|j| {
                    let v = theta.get(j, k).abs();
                    (v > 0.0).then(|| v.log10())
                })
                .collect()
        })
        .collect();
    HeatTable {
        theta_column: order,
        cells,
    }
}

impl HeatTable {
    pub fn to_csv(&self) -> String {
        let ncols = self.cells.first().map_or(0, |r| r.len());
        let mut out = String::from("theta_column");
        for j in 0..ncols {
            out.push_str(&format!(",x{}", j + 1));
        }
        out.push('\n');
        for (k, row) in self.theta_column.iter().zip(&self.cells) {
            out.push_str(&(k + 1).to_string());
            for c in row {
                out.push(',');
                if let Some(v) = c {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Number of `important` coordinates whose score exceeds the 95th percentile
/// (nearest rank) of the remaining coordinates' scores.
pub fn selection_hits(scores: &[f64], important: &[usize]) -> usize {
    let mut nulls: Vec<f64> = (0..scores.len())
        .filter(|j| !important.contains(j))
        .map(|j| scores[j])
        .collect();
    if nulls.is_empty() {
        return important.len();
    }
    nulls.sort_by(f64::total_cmp);
    let rank = ((0.95 * nulls.len() as f64).ceil() as usize).clamp(1, nulls.len());
    let q = nulls[rank - 1];
    important.iter().filter(|&&j| scores[j] > q).count()
}

/// Records, timings and heat tables of a finished run.
#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub records: Vec<TrialRecord>,
    pub timings: Vec<Timing>,
    /// Θ heat data of the first FAST-NN trial at each p.
    pub heat: Vec<(usize, HeatTable)>,
}

struct TrialOutput {
    records: Vec<(TrialRecord, f64)>,
    heat: Option<HeatTable>,
}

pub(crate) struct RecordBase<'a> {
    pub plan: &'a ExperimentPlan,
    pub settings: &'a FitSettings,
    pub p: usize,
    pub n1: usize,
    pub trial: usize,
    pub seed: u64,
}

impl RecordBase<'_> {
    pub(crate) fn record(&self, est: EstimatorId, metric: &str) -> TrialRecord {
        TrialRecord {
            schema_version: SCHEMA_VERSION,
            experiment: self.plan.experiment,
            estimator: est,
            p: self.p,
            n1: self.n1,
            trial: self.trial,
            seed: self.seed,
            metric: metric.into(),
            value: None,
            best_epoch: None,
            dropout: None,
            lambda: None,
            selection_hits: None,
            active: None,
            status: "ok".into(),
            error: String::new(),
            hyper: self.settings.echo(est),
        }
    }
}

pub(crate) fn fill_from_fit(rec: &mut TrialRecord, fit: &Fitted) {
    rec.best_epoch = fit.best_epoch;
    rec.dropout = fit.dropout;
    rec.lambda = fit.lambda;
    if let FittedModel::Fanam(m) = &fit.model {
        rec.active = Some(m.active().len());
    }
}

pub(crate) fn fail(rec: &mut TrialRecord, e: &Error) {
    rec.status = "failed".into();
    rec.error = e.to_string();
    rec.value = None;
}

fn run_trial(plan: &ExperimentPlan, settings: &FitSettings, p: usize, trial: usize) -> Result<TrialOutput> {
    let seed = trial_seed(plan.seed, p, trial);
    let dgp = FactorDgp::new(plan.dgp_spec(p), seed)?;
    let important = dgp.spec.regression.important();
    let train = dgp.generate(plan.n_train, "train");
    let valid = dgp.generate(plan.n_valid, "valid");
    let test = dgp.generate(plan.n_test, "test");
    let n1_max = plan.n_unlabeled.iter().copied().max().unwrap_or(0);
    let unlabeled = dgp.generate(n1_max, "unlabeled");
    let truth = test.truth()?;
    let cfg = TrainConfig {
        seed: tag_seed(seed, "fit"),
        ..settings.train.clone()
    };
    let settings = FitSettings {
        train: cfg,
        ..settings.clone()
    };
    let mut out = TrialOutput {
        records: Vec::new(),
        heat: None,
    };
    for &n1 in &plan.n_unlabeled {
        let rows: Vec<usize> = (0..n1).collect();
        let w = estimate_dpm_pca(&unlabeled.x.select_rows(&rows), plan.rbar.min(n1));
        let base = RecordBase {
            plan,
            settings: &settings,
            p,
            n1,
            trial,
            seed,
        };
        for &est in &plan.estimators {
            let mut rec = base.record(est, "mse");
            let start = Instant::now();
            let fitted = match (&w, est.uses_projection()) {
                (Err(e), true) => Err(e.clone()),
                (w, _) => fit_estimator(est, &train, &valid, w.as_ref().ok(), &settings),
            };
            match fitted.and_then(|f| Ok((f.model.predict(&test)?, f))) {
                Ok((pred, fit)) => {
                    fill_from_fit(&mut rec, &fit);
                    match eval_mse(&pred, truth) {
                        Ok(v) => rec.value = Some(v),
                        Err(e) => fail(&mut rec, &e),
                    }
                    if let FittedModel::Fast(m) = &fit.model {
                        if !important.is_empty() {
                            rec.selection_hits = Some(selection_hits(&m.row_max(), &important));
                        }
                        if trial == 0 && plan.heat_cols > 0 && out.heat.is_none() {
                            out.heat = Some(export_theta_heatdata(m, plan.heat_cols));
                        }
                    }
                }
                Err(e) => fail(&mut rec, &e),
            }
            out.records.push((rec, start.elapsed().as_secs_f64()));
        }
    }
    Ok(out)
}

fn thread_pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} worker threads: {e}")))
}

/// Run every (p, trial) of the plan on `jobs` workers (0 = one per core).
/// Results do not depend on `jobs`.
pub fn run_experiment(plan: &ExperimentPlan, jobs: usize) -> CliResult<ExperimentOutput> {
    plan.validate()?;
    if plan.experiment == ExperimentId::RealData {
        return run_real_data(plan, jobs);
    }
    let settings = plan.fit_settings();
    let tasks: Vec<(usize, usize)> = plan
        .p
        .iter()
        .flat_map(|&p| (0..plan.trials).map(move |t| (p, t)))
        .collect();
    let pool = thread_pool(jobs)?;
    let results: Vec<((usize, usize), Result<TrialOutput>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, t)| ((p, t), run_trial(plan, &settings, p, t)))
            .collect()
    });
    let mut out = ExperimentOutput::default();
    for ((p, trial), res) in results {
        match res {
            Ok(t) => {
                for (rec, secs) in t.records {
                    out.timings.push(timing(&rec, secs));
                    out.records.push(rec);
                }
                if let Some(h) = t.heat {
                    out.heat.push((p, h));
                }
            }
            Err(e) => {
                // the design itself could not be generated: every estimator fails
                let seed = trial_seed(plan.seed, p, trial);
                let base = RecordBase {
                    plan,
                    settings: &settings,
                    p,
                    n1: 0,
                    trial,
                    seed,
                };
                for &n1 in &plan.n_unlabeled {
                    for &est in &plan.estimators {
                        let mut rec = base.record(est, "mse");
                        rec.n1 = n1;
                        fail(&mut rec, &e);
                        out.timings.push(timing(&rec, 0.0));
                        out.records.push(rec);
                    }
                }
            }
        }
    }
    sort_output(plan, &mut out);
    Ok(out)
}

pub(crate) fn run_parallel<T: Send>(jobs: usize, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> CliResult<Vec<T>> {
    let pool = thread_pool(jobs)?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

pub(crate) fn timing(rec: &TrialRecord, seconds: f64) -> Timing {
    Timing {
        experiment: rec.experiment,
        estimator: rec.estimator,
        p: rec.p,
        n1: rec.n1,
        trial: rec.trial,
        seconds,
    }
}

/// Order records by (p, n1, trial, roster position).
pub(crate) fn sort_output(plan: &ExperimentPlan, out: &mut ExperimentOutput) {
    let pos = |e: EstimatorId| plan.estimators.iter().position(|&x| x == e).unwrap_or(usize::MAX);
    out.records.sort_by_key(|r| (r.p, r.n1, r.trial, pos(r.estimator)));
    out.timings.sort_by_key(|r| (r.p, r.n1, r.trial, pos(r.estimator)));
    out.heat.sort_by_key(|h| h.0);
}

/// Mean and standard deviation of one (estimator, p, n1) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: EstimatorId,
    pub p: usize,
    pub n1: usize,
    pub metric: String,
    pub completed: usize,
    pub failed: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: ExperimentId,
    pub seed: u64,
    pub trials: usize,
    pub rows: Vec<SummaryRow>,
}

/// Aggregate per (estimator, p, n1); values are summed in trial order so the
/// result does not depend on execution order.
pub fn summarize(plan: &ExperimentPlan, records: &[TrialRecord]) -> Summary {
    let pos = |e: EstimatorId| plan.estimators.iter().position(|&x| x == e).unwrap_or(usize::MAX);
    let mut groups: BTreeMap<(usize, usize, usize, EstimatorId), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((pos(r.estimator), r.p, r.n1, r.estimator))
            .or_default()
            .push(r);
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((_, p, n1, estimator), mut rs)| {
            rs.sort_by_key(|r| r.trial);
            let vals: Vec<f64> = rs.iter().filter_map(|r| r.value.filter(|_| r.ok())).collect();
            let n = vals.len();
            let mean = (n > 0).then(|| vals.iter().sum::<f64>() / n as f64);
            let sd = mean
                .filter(|_| n > 1)
                .map(|m| (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt());
            SummaryRow {
                estimator,
                p,
                n1,
                metric: rs[0].metric.clone(),
                completed: n,
                failed: rs.len() - n,
                mean,
                sd,
            }
        })
        .collect();
    rows.sort_by_key(|r| (r.p, r.n1, pos(r.estimator)));
    Summary {
        schema_version: SCHEMA_VERSION,
        experiment: plan.experiment,
        seed: plan.seed,
        trials: plan.trials,
        rows,
    }
}

impl Summary {
    pub fn mean(&self, est: EstimatorId, p: usize, n1: Option<usize>) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.estimator == est && r.p == p && n1.is_none_or(|n| r.n1 == n))
            .and_then(|r| r.mean)
    }
}
