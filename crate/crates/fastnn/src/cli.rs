//! Command-line interface: argument definitions and subcommand drivers.

use std::env;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fastnn_core::estimators::FittedModel;
use fastnn_core::factor::{estimate_dpm_pca, FactorDgp, FastKind};
use fastnn_core::metrics::eval_mse;
use fastnn_core::netbuild::audit::{run_audit, AuditGrid, AuditRow};
use fastnn_core::rng::trial_seed;
use fastnn_core::{Dataset, RowMatrix};
use serde::{Deserialize, Serialize};

use crate::bench::{
    fit_estimator, run_experiment, summarize, EstimatorId, ExperimentId, ExperimentOutput, ExperimentPlan, Summary,
    SCHEMA_VERSION,
};
use crate::config::{load_plan, plan_from_toml, plan_to_toml};
use crate::csvio::{
    matrix_csv, read_table, to_csv_string, write_dataset, write_file, RowRange, SplitSpec, Standardizer,
};
use crate::error::{config_err, CliError, CliResult};
use crate::realdata::{prepare, RealDataSpec};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FASTNN_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "fastnn",
    version,
    about = "Factor-augmented neural regression: simulations, fitting and audits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a Monte-Carlo experiment (or the real-data benchmark).
    Simulate(SimulateArgs),
    /// Write a simulated data set to CSV, latent truth in a sibling file.
    Generate(GenerateArgs),
    /// Fit an estimator on a CSV data set and save the model as JSON.
    Fit(FitArgs),
    /// Append a prediction column to a CSV data set.
    Predict(PredictArgs),
    /// Out-of-sample R² of a saved model on a CSV data set.
    Eval(EvalArgs),
    /// Check every network construction against its declared bounds.
    NetbuildAudit(AuditArgs),
    /// Estimate a diversified projection by PCA from CSV covariates.
    Dpm(DpmArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    Exp1,
    Exp2,
    Exp3,
    Fast,
    Fanam,
    NullCase,
    RealData,
}

impl SimKind {
    pub fn experiment(self) -> ExperimentId {
        match self {
            SimKind::Exp1 => ExperimentId::Exp1,
            SimKind::Exp2 => ExperimentId::Exp2,
            SimKind::Exp3 => ExperimentId::Exp3,
            SimKind::Fast => ExperimentId::FastSim,
            SimKind::Fanam => ExperimentId::FanamSim,
            SimKind::NullCase => ExperimentId::NullCase,
            SimKind::RealData => ExperimentId::RealData,
        }
    }
}

fn parse_fast_kind(s: &str) -> Result<FastKind, String> {
    match s {
        "1" | "linear" => Ok(FastKind::Linear),
        "2" | "composite" => Ok(FastKind::Composite),
        _ => Err(format!("unknown FAST function `{s}` (expected 1 or 2)")),
    }
}

/// Flags that override the config file.
#[derive(Args, Debug, Default, Clone)]
pub struct PlanFlags {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated ambient dimensions.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub n_train: Option<usize>,
    #[arg(long)]
    pub n_valid: Option<usize>,
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Comma-separated unlabeled sample sizes for the projection.
    #[arg(long = "n1", value_delimiter = ',')]
    pub n_unlabeled: Option<Vec<usize>>,
    #[arg(long)]
    pub rbar: Option<usize>,
    /// Comma-separated estimator ids.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<EstimatorId>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// FAST-NN penalty weight.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// FAST-NN clipping threshold.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub n_sel: Option<usize>,
    #[arg(long)]
    pub fanam_lambda: Option<f64>,
    /// FAST simulation function: 1 (linear) or 2 (composite).
    #[arg(long, value_parser = parse_fast_kind)]
    pub fast_kind: Option<FastKind>,
    #[arg(long)]
    pub noise_var: Option<f64>,
    #[arg(long)]
    pub heat_cols: Option<usize>,
}

impl PlanFlags {
    pub fn apply(&self, plan: &mut ExperimentPlan) {
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.seed, plan.seed);
        set!(self.p, plan.p);
        set!(self.trials, plan.trials);
        set!(self.n_train, plan.n_train);
        set!(self.n_valid, plan.n_valid);
        set!(self.n_test, plan.n_test);
        set!(self.n_unlabeled, plan.n_unlabeled);
        set!(self.rbar, plan.rbar);
        set!(self.estimators, plan.estimators);
        set!(self.epochs, plan.train.epochs);
        set!(self.batch_size, plan.train.batch_size);
        set!(self.lr, plan.train.lr);
        set!(self.depth, plan.arch.depth);
        set!(self.width, plan.arch.width);
        set!(self.tau, plan.fast.penalty.tau);
        set!(self.n_sel, plan.fast.n_sel);
        set!(self.fanam_lambda, plan.fanam_lambda);
        set!(self.fast_kind, plan.fast_kind);
        set!(self.heat_cols, plan.heat_cols);
        if let Some(l) = self.lambda {
            plan.fast.penalty.lambda = l;
            plan.fast_lambda_grid.clear();
        }
        if let Some(v) = self.noise_var {
            plan.noise_var = Some(v);
        }
    }
}

/// Where a labelled CSV comes from and how its rows are split.
#[derive(Args, Debug, Default, Clone)]
pub struct DataFlags {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Response column name.
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated covariate columns (default: all but the response).
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Fraction of leading rows used for training and validation.
    #[arg(long)]
    pub split: Option<f64>,
    /// Fraction of those rows used for training.
    #[arg(long)]
    pub inner_split: Option<f64>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Training rows as start..end (0-based, end exclusive); overrides the ratio split.
    #[arg(long, requires = "valid_rows")]
    pub train_rows: Option<RowRange>,
    #[arg(long, requires = "train_rows")]
    pub valid_rows: Option<RowRange>,
    #[arg(long, requires = "train_rows")]
    pub test_rows: Option<RowRange>,
    /// Keep covariates on their original scale.
    #[arg(long)]
    pub no_standardize: bool,
}

impl DataFlags {
    pub fn apply(&self, spec: &mut RealDataSpec) {
        if let Some(p) = &self.data {
            spec.path = p.clone();
        }
        if let Some(r) = &self.response {
            spec.response = r.clone();
        }
        if let Some(c) = &self.covariates {
            spec.covariates = Some(c.clone());
        }
        if let (Some(train), Some(valid)) = (self.train_rows, self.valid_rows) {
            spec.split = SplitSpec::Rows {
                train,
                valid,
                test: self.test_rows,
            };
        } else if self.split.is_some() || self.inner_split.is_some() || self.split_seed.is_some() {
            let (mut s, mut i, mut seed) = match spec.split {
                SplitSpec::Ratio {
                    split,
                    inner_split,
                    split_seed,
                } => (split, inner_split, split_seed),
                SplitSpec::Rows { .. } => (0.6, 0.7, 0),
            };
            s = self.split.unwrap_or(s);
            i = self.inner_split.unwrap_or(i);
            seed = self.split_seed.unwrap_or(seed);
            spec.split = SplitSpec::Ratio {
                split: s,
                inner_split: i,
                split_seed: seed,
            };
        }
        if self.no_standardize {
            spec.standardize = false;
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub experiment: SimKind,
    /// TOML plan; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $FASTNN_OUT_DIR/<experiment> or fastnn-out/<experiment>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Published sizes: width 300, 200 epochs, 200 trials, n_test 100000.
    #[arg(long)]
    pub paper_scale: bool,
    #[command(flatten)]
    pub plan: PlanFlags,
    #[command(flatten)]
    pub data: DataFlags,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Design to draw from.
    #[arg(long, default_value = "exp1")]
    pub experiment: SimKind,
    #[arg(long)]
    pub p: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stream label; different labels give independent samples of one design.
    #[arg(long, default_value = "train")]
    pub stream: String,
    #[arg(long, value_parser = parse_fast_kind)]
    pub fast_kind: Option<FastKind>,
    #[arg(long)]
    pub noise_var: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long, default_value = "fast-nn")]
    pub estimator: EstimatorId,
    /// TOML plan of the real-data experiment (architecture, training, penalty, data).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model file to write (default: <output dir>/model.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Which inner split to use for a ratio split.
    #[arg(long, default_value_t = 0)]
    pub repeat: usize,
    #[command(flatten)]
    pub plan: PlanFlags,
    #[command(flatten)]
    pub data: DataFlags,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "prediction")]
    pub column: String,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Rows to score as start..end (default: all rows).
    #[arg(long)]
    pub rows: Option<RowRange>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// TOML parameter grid.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run no constructions at all.
    #[arg(long, conflicts_with = "config")]
    pub empty: bool,
    /// Declare multiply networks one layer shallower than built.
    #[arg(long)]
    pub faulty_multiply: bool,
    /// CSV report (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DpmArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Column to leave out (e.g. the response).
    #[arg(long)]
    pub exclude: Vec<String>,
    /// Comma-separated columns to use (default: all not excluded).
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    #[arg(long, default_value_t = 10)]
    pub rbar: usize,
    #[arg(long)]
    pub standardize: bool,
    /// CSV with one row per covariate (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn default_out_dir() -> PathBuf {
    env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("fastnn-out"), PathBuf::from)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::NetbuildAudit(a) => cmd_netbuild_audit(&a),
        Command::Dpm(a) => cmd_dpm(&a),
    }
}

/// Plan after defaults, config file and flags.
pub fn resolve_plan(
    experiment: ExperimentId,
    config: Option<&Path>,
    paper_scale: bool,
    plan_flags: &PlanFlags,
    data_flags: &DataFlags,
) -> CliResult<ExperimentPlan> {
    let mut plan = load_plan(experiment, config, paper_scale)?;
    plan_flags.apply(&mut plan);
    if experiment == ExperimentId::RealData {
        data_flags.apply(plan.data.get_or_insert_with(RealDataSpec::default));
    } else if data_flags.data.is_some() {
        return config_err("--data only applies to the real-data experiment");
    }
    plan.validate()?;
    Ok(plan)
}

/// Files written by a finished run.
pub fn write_outputs(dir: &Path, plan: &ExperimentPlan, out: &ExperimentOutput) -> CliResult<Summary> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let header = [
        "schema_version",
        "experiment",
        "estimator",
        "p",
        "n1",
        "trial",
        "seed",
        "metric",
        "value",
        "best_epoch",
        "dropout",
        "lambda",
        "selection_hits",
        "active",
        "status",
        "error",
        "hyper",
    ];
    write_file(&dir.join("results.csv"), &to_csv_string(&out.records, &header)?)?;
    let theader = ["experiment", "estimator", "p", "n1", "trial", "seconds"];
    write_file(&dir.join("timings.csv"), &to_csv_string(&out.timings, &theader)?)?;
    let summary = summarize(plan, &out.records);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&dir.join("summary.json"), &(json + "\n"))?;
    write_file(&dir.join("config.resolved.toml"), &plan_to_toml(plan)?)?;
    for (p, heat) in &out.heat {
        write_file(&dir.join(format!("theta_heat_p{p}.csv")), &heat.to_csv())?;
    }
    Ok(summary)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let experiment = a.experiment.experiment();
    let plan = resolve_plan(experiment, a.config.as_deref(), a.paper_scale, &a.plan, &a.data)?;
    let dir = a.out.clone().unwrap_or_else(|| default_out_dir().join(experiment.id()));
    let out = run_experiment(&plan, a.jobs)?;
    let summary = write_outputs(&dir, &plan, &out)?;
    println!(
        "{:<16} {:>6} {:>6} {:>10} {:>10} {:>6}",
        "estimator", "p", "n1", "mean", "sd", "done"
    );
    for r in &summary.rows {
        println!(
            "{:<16} {:>6} {:>6} {:>10} {:>10} {:>3}/{}",
            r.estimator.id(),
            r.p,
            r.n1,
            fmt_opt(r.mean),
            fmt_opt(r.sd),
            r.completed,
            r.completed + r.failed
        );
    }
    let failed = out.records.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        eprintln!("{failed} estimator fits failed; see the error column of results.csv");
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let mut plan = ExperimentPlan::defaults(a.experiment.experiment(), false);
    if plan.experiment == ExperimentId::RealData {
        return config_err("the real-data experiment has no simulated design");
    }
    if let Some(k) = a.fast_kind {
        plan.fast_kind = k;
    }
    plan.noise_var = a.noise_var;
    let dgp = FactorDgp::new(plan.dgp_spec(a.p), trial_seed(a.seed, a.p, 0))?;
    let data = dgp.generate(a.n, &a.stream);
    write_dataset(&a.out, &data)
}

/// A fitted model with everything needed to apply it to new rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub estimator: EstimatorId,
    pub response: String,
    pub covariates: Vec<String>,
    pub standardizer: Option<Standardizer>,
    /// Mean training response, the reference of R²_oos.
    pub train_mean: f64,
    /// Resolved configuration of the fit.
    pub plan: ExperimentPlan,
    pub model: FittedModel,
}

impl ModelFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: not a model file: {e}", path.display())))
    }

    /// Covariates of `table` in model order, standardized if the fit was.
    pub fn design(&self, table: &crate::csvio::Table) -> CliResult<RowMatrix> {
        let x = table.covariates(&self.covariates)?;
        match &self.standardizer {
            Some(s) => s.apply(&x),
            None => Ok(x),
        }
    }

    pub fn predict(&self, table: &crate::csvio::Table) -> CliResult<Vec<f64>> {
        let x = self.design(table)?;
        let n = x.rows;
        Ok(self.model.predict(&Dataset::new(x, vec![0.0; n])?)?)
    }
}

pub fn cmd_fit(a: &FitArgs) -> CliResult<()> {
    let mut plan = resolve_plan(ExperimentId::RealData, a.config.as_deref(), false, &a.plan, &a.data)?;
    plan.estimators = vec![a.estimator];
    plan.validate()?;
    let spec = plan.data.clone().expect("validated");
    let table = read_table(&spec.path)?;
    let (data, names) = table.dataset(&spec.response, spec.covariates.as_deref())?;
    let prep = prepare(&data, &spec.split.indices(data.len(), a.repeat)?, spec.standardize)?;
    let mut settings = plan.fit_settings();
    settings.train.seed = trial_seed(plan.seed, data.dim(), a.repeat);
    let w = if a.estimator.uses_projection() {
        Some(prep.projection(plan.rbar)?)
    } else {
        None
    };
    let fit = fit_estimator(a.estimator, &prep.train, &prep.valid, w.as_ref(), &settings)?;
    let file = ModelFile {
        schema_version: SCHEMA_VERSION,
        estimator: a.estimator,
        response: spec.response.clone(),
        covariates: names,
        standardizer: prep.standardizer.clone(),
        train_mean: prep.train_mean,
        plan,
        model: fit.model,
    };
    let path = a.out.clone().unwrap_or_else(|| default_out_dir().join("model.json"));
    let json = serde_json::to_string(&file).expect("model serializes");
    write_file(&path, &(json + "\n"))?;
    let valid = file.model.predict(&prep.valid)?;
    println!("validation_mse {}", eval_mse(&valid, &prep.valid.y)?);
    if !prep.test.is_empty() {
        let pred = file.model.predict(&prep.test)?;
        report_r2(&pred, &prep.test.y, prep.train_mean)?;
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn report_r2(pred: &[f64], y: &[f64], train_mean: f64) -> CliResult<()> {
    let den: f64 = y.iter().map(|v| (v - train_mean).powi(2)).sum();
    if den == 0.0 {
        // every response equals the reference mean; nothing to explain
        println!("r2_oos 0");
        eprintln!("note: all responses equal the training mean; R² reported as 0");
    } else {
        println!("r2_oos {}", fastnn_core::metrics::eval_r2_oos(pred, y, train_mean)?);
    }
    println!("mse {}", eval_mse(pred, y)?);
    Ok(())
}

pub fn cmd_predict(a: &PredictArgs) -> CliResult<()> {
    let model = ModelFile::load(&a.model)?;
    let table = read_table(&a.data)?;
    let pred = model.predict(&table)?;
    let mut names = table.names.clone();
    names.push(a.column.clone());
    let col = RowMatrix::from_vec(pred.len(), 1, pred)?;
    emit(a.out.as_deref(), &matrix_csv(&names, &table.data.hcat(&col)?)?)
}

pub fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let model = ModelFile::load(&a.model)?;
    let table = read_table(&a.data)?;
    let yj = table.column(&model.response)?;
    let mut pred = model.predict(&table)?;
    let mut y = table.data.column(yj);
    if let Some(r) = a.rows {
        if r.start >= r.end || r.end > y.len() {
            return config_err(format!("rows {}..{} invalid for {} rows", r.start, r.end, y.len()));
        }
        pred = pred[r.start..r.end].to_vec();
        y = y[r.start..r.end].to_vec();
    }
    if y.is_empty() {
        return Err(CliError::Input("no rows to evaluate".into()));
    }
    report_r2(&pred, &y, model.train_mean)
}

pub fn load_audit_grid(path: &Path) -> CliResult<AuditGrid> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message().trim())))
}

pub fn audit_csv(rows: &[AuditRow]) -> CliResult<String> {
    to_csv_string(rows, &["construction", "quantity", "declared", "measured", "ok"])
}

pub fn cmd_netbuild_audit(a: &AuditArgs) -> CliResult<()> {
    let mut grid = match (&a.config, a.empty) {
        (Some(p), _) => load_audit_grid(p)?,
        (None, true) => AuditGrid::empty(),
        (None, false) => AuditGrid::default(),
    };
    grid.faulty_multiply |= a.faulty_multiply;
    let rows = run_audit(&grid)?;
    emit(a.out.as_deref(), &audit_csv(&rows)?)?;
    let bad: Vec<&AuditRow> = rows.iter().filter(|r| !r.ok).collect();
    for r in &bad {
        eprintln!(
            "violated: {} {} declared {} measured {}",
            r.construction, r.quantity, r.declared, r.measured
        );
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Contract(format!(
            "{} of {} audit checks failed",
            bad.len(),
            rows.len()
        )))
    }
}

pub fn cmd_dpm(a: &DpmArgs) -> CliResult<()> {
    let table = read_table(&a.data)?;
    let names: Vec<String> = match &a.columns {
        Some(c) => c.clone(),
        None => table.names.iter().filter(|n| !a.exclude.contains(n)).cloned().collect(),
    };
    for e in &a.exclude {
        table.column(e)?;
    }
    if names.is_empty() {
        return config_err("no columns left for the projection");
    }
    let mut x = table.covariates(&names)?;
    if a.standardize {
        x = Standardizer::fit(&x).apply(&x)?;
    }
    let w = estimate_dpm_pca(&x, a.rbar)?;
    let mut text = String::from("covariate");
    for k in 1..=w.rbar() {
        text.push_str(&format!(",w{k}"));
    }
    text.push('\n');
    for (j, n) in names.iter().enumerate() {
        text.push_str(n);
        for k in 0..w.rbar() {
            text.push_str(&format!(",{}", w.w.get(j, k)));
        }
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)?;
    let eig: Vec<String> = w.eigenvalues.iter().map(|e| e.to_string()).collect();
    eprintln!("eigenvalues {}", eig.join(" "));
    Ok(())
}

/// Parse a real-data plan from TOML text (used by tests).
pub fn parse_plan(text: &str) -> CliResult<ExperimentPlan> {
    plan_from_toml(text, "<config>", false)
}
