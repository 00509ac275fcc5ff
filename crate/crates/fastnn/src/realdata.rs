//! Repeated-split benchmark on a CSV panel, scored by out-of-sample R².

use std::path::PathBuf;
use std::time::Instant;

use fastnn_core::factor::{estimate_dpm_pca, DiversifiedProjection};
use fastnn_core::metrics::eval_r2_oos;
use fastnn_core::rng::{tag_seed, trial_seed};
use fastnn_core::train::TrainConfig;
use fastnn_core::{Dataset, RowMatrix};
use serde::{Deserialize, Serialize};

use crate::bench::{
    fail, fill_from_fit, fit_estimator, run_parallel, sort_output, timing, ExperimentOutput, ExperimentPlan,
    FitSettings, RecordBase,
};
use crate::csvio::{read_table, SplitSpec, Splits, Standardizer};
use crate::error::{config_err, CliResult};

/// Data source of the real-data benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealDataSpec {
    pub path: PathBuf,
    pub response: String,
    /// Covariate columns; every column except the response when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariates: Option<Vec<String>>,
    #[serde(default)]
    pub split: SplitSpec,
    /// Standardize covariates with training-row statistics.
    #[serde(default = "yes")]
    pub standardize: bool,
}

fn yes() -> bool {
    true
}

impl Default for RealDataSpec {
    fn default() -> Self {
        RealDataSpec {
            path: PathBuf::new(),
            response: String::new(),
            covariates: None,
            split: SplitSpec::default(),
            standardize: true,
        }
    }
}

impl RealDataSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.path.as_os_str().is_empty() {
            return config_err("data.path is required");
        }
        if self.response.is_empty() {
            return config_err("data.response is required");
        }
        self.split.validate()
    }
}

/// One split of a labelled table, ready for fitting.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
    pub standardizer: Option<Standardizer>,
    /// Mean training response, the R²_oos reference.
    pub train_mean: f64,
    /// Rows whose covariates entered the projection (training and validation).
    pub n_projection: usize,
}

fn rows(data: &Dataset, idx: &[usize], st: Option<&Standardizer>) -> CliResult<Dataset> {
    let d = data.subset(idx);
    match st {
        Some(s) => Ok(Dataset::new(s.apply(&d.x)?, d.y)?),
        None => Ok(d),
    }
}

pub fn prepare(data: &Dataset, splits: &Splits, standardize: bool) -> CliResult<Prepared> {
    let st = standardize.then(|| Standardizer::fit(&data.x.select_rows(&splits.train)));
    let train = rows(data, &splits.train, st.as_ref())?;
    let train_mean = train.y.iter().sum::<f64>() / train.len() as f64;
    Ok(Prepared {
        valid: rows(data, &splits.valid, st.as_ref())?,
        test: rows(data, &splits.test, st.as_ref())?,
        train,
        standardizer: st,
        train_mean,
        n_projection: splits.train.len() + splits.valid.len(),
    })
}

impl Prepared {
    /// PCA projection from the training and validation covariates (no labels).
    pub fn projection(&self, rbar: usize) -> fastnn_core::Result<DiversifiedProjection> {
        let mut x = self.train.x.data.clone();
        x.extend_from_slice(&self.valid.x.data);
        let x = RowMatrix::from_vec(self.n_projection, self.train.dim(), x)?;
        estimate_dpm_pca(&x, rbar.min(self.n_projection))
    }
}

pub(crate) fn run_real_data(plan: &ExperimentPlan, jobs: usize) -> CliResult<ExperimentOutput> {
    let spec = plan.data.as_ref().expect("validated plan");
    let table = read_table(&spec.path)?;
    let (data, _) = table.dataset(&spec.response, spec.covariates.as_deref())?;
    let p = data.dim();
    let settings = plan.fit_settings();
    let per_trial = run_parallel(jobs, plan.trials, |t| run_split(plan, &settings, &data, spec, t))?;
    let mut out = ExperimentOutput::default();
    for recs in per_trial {
        for (rec, secs) in recs? {
            out.timings.push(timing(&rec, secs));
            out.records.push(rec);
        }
    }
    debug_assert!(out.records.iter().all(|r| r.p == p));
    sort_output(plan, &mut out);
    Ok(out)
}

fn run_split(
    plan: &ExperimentPlan,
    settings: &FitSettings,
    data: &Dataset,
    spec: &RealDataSpec,
    t: usize,
) -> CliResult<Vec<(crate::bench::TrialRecord, f64)>> {
    let p = data.dim();
    let prep = prepare(data, &spec.split.indices(data.len(), t)?, spec.standardize)?;
    let seed = trial_seed(plan.seed, p, t);
    let settings = FitSettings {
        train: TrainConfig {
            seed: tag_seed(seed, "fit"),
            ..settings.train.clone()
        },
        ..settings.clone()
    };
    let w = prep.projection(plan.rbar);
    let base = RecordBase {
        plan,
        settings: &settings,
        p,
        n1: prep.n_projection,
        trial: t,
        seed,
    };
    let mut out = Vec::new();
    for &est in &plan.estimators {
        let mut rec = base.record(est, "r2_oos");
        let start = Instant::now();
        let res = match (&w, est.uses_projection()) {
            (Err(e), true) => Err(e.clone()),
            (w, _) => fit_estimator(est, &prep.train, &prep.valid, w.as_ref().ok(), &settings),
        }
        .and_then(|fit| {
            let pred = fit.model.predict(&prep.test)?;
            Ok((eval_r2_oos(&pred, &prep.test.y, prep.train_mean)?, fit))
        });
        match res {
            Ok((r2, fit)) => {
                fill_from_fit(&mut rec, &fit);
                rec.value = Some(r2);
            }
            Err(e) => fail(&mut rec, &e),
        }
        out.push((rec, start.elapsed().as_secs_f64()));
    }
    Ok(out)
}
