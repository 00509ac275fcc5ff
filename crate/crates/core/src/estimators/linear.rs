use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_len, config, Error, Result};
use crate::factor::{fix_sign, top_eigen_gram};
use crate::matrix::{dot, gram_cols, gram_rows, sym_eigen_desc, RowMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearMethod {
    Lasso,
    Pcr,
    #[serde(rename = "min-l2")]
    MinL2,
    FarmLite,
}

impl LinearMethod {
    pub fn id(self) -> &'static str {
        match self {
            LinearMethod::Lasso => "lasso",
            LinearMethod::Pcr => "pcr",
            LinearMethod::MinL2 => "min-l2",
            LinearMethod::FarmLite => "farm-lite",
        }
    }
}

/// `x ↦ βᵀx + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedLinear {
    pub method: LinearMethod,
    pub beta: Vec<f64>,
    pub intercept: f64,
    /// Number of principal components used (PCR and farm-lite).
    pub components: usize,
    /// Lasso penalty level (Lasso and farm-lite).
    pub lambda: f64,
    /// False when coordinate descent stopped at the sweep limit.
    pub converged: bool,
    /// Largest violation of the Lasso optimality conditions on the
    /// internal (centered and scaled) design.
    pub kkt_residual: f64,
}

impl FittedLinear {
    fn plain(method: LinearMethod, beta: Vec<f64>, intercept: f64) -> Self {
        FittedLinear {
            method,
            beta,
            intercept,
            components: 0,
            lambda: 0.0,
            converged: true,
            kkt_residual: 0.0,
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        dot(&self.beta, x) + self.intercept
    }

    pub fn predict(&self, x: &RowMatrix) -> Result<Vec<f64>> {
        check_len("covariate columns", self.beta.len(), x.cols)?;
        Ok((0..x.rows).map(|i| self.predict_row(x.row(i))).collect())
    }
}

/// Minimum-norm interpolator `β = Xᵀ(XXᵀ)⁻¹y`. A ridge of `1e-10·I` is added
/// to the Gram matrix when its condition number exceeds 1e12.
pub fn fit_min_l2(x: &RowMatrix, y: &[f64]) -> Result<FittedLinear> {
    check_len("response length", x.rows, y.len())?;
    if x.rows == 0 {
        return config("min-l2 needs at least one sample");
    }
    if x.cols < x.rows {
        return config(format!("min-l2 needs p >= n, got p = {} and n = {}", x.cols, x.rows));
    }
    let mut g = gram_rows(x);
    let (vals, _) = sym_eigen_desc(g.clone());
    let (top, bottom) = (vals[0], vals[vals.len() - 1]);
    if !(bottom > 0.0) || top / bottom > 1e12 {
        for i in 0..g.nrows() {
            g[(i, i)] += 1e-10;
        }
    }
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::Numeric("Gram matrix is singular".into()))?;
    let a = chol.solve(&DVector::from_column_slice(y));
    let mut beta = vec![0.0; x.cols];
    for i in 0..x.rows {
        crate::matrix::axpy(a[i], x.row(i), &mut beta);
    }
    Ok(FittedLinear::plain(LinearMethod::MinL2, beta, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LassoOptions {
    /// Scale columns to unit variance before solving.
    pub standardize: bool,
    /// Fit an unpenalized intercept (columns and response are centered).
    pub intercept: bool,
    pub max_sweeps: usize,
    /// Stop when no coefficient moves by more than this in a sweep.
    pub tol: f64,
    /// Keep sweeping until the optimality conditions hold to this level.
    pub kkt_tol: f64,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            standardize: true,
            intercept: true,
            max_sweeps: 10_000,
            tol: 1e-8,
            kkt_tol: 1e-7,
        }
    }
}

/// Coordinate-descent state for `(2n)⁻¹‖y − Xβ‖² + λ‖β‖₁` on the working
/// design.
struct LassoProblem {
    n: usize,
    cols: Vec<Vec<f64>>,
    /// `‖X_j‖²/n` per working column.
    sq: Vec<f64>,
    center: Vec<f64>,
    scale: Vec<f64>,
    y_mean: f64,
    y: Vec<f64>,
    beta: Vec<f64>,
    resid: Vec<f64>,
}

impl LassoProblem {
    fn new(x: &RowMatrix, y: &[f64], opts: &LassoOptions) -> Result<Self> {
        check_len("response length", x.rows, y.len())?;
        let (n, p) = (x.rows, x.cols);
        if n == 0 {
            return config("lasso needs at least one sample");
        }
        let nf = n as f64;
        let mut cols = Vec::with_capacity(p);
        let mut center = vec![0.0; p];
        let mut scale = vec![1.0; p];
        let mut sq = vec![0.0; p];
        for j in 0..p {
            let mut c = x.column(j);
            if opts.intercept {
                center[j] = c.iter().sum::<f64>() / nf;
                for v in c.iter_mut() {
                    *v -= center[j];
                }
            }
            let ms = c.iter().map(|v| v * v).sum::<f64>() / nf;
            if opts.standardize && ms > 0.0 {
                scale[j] = sqrt(ms);
                for v in c.iter_mut() {
                    *v /= scale[j];
                }
                sq[j] = 1.0;
            } else {
                sq[j] = ms;
            }
            cols.push(c);
        }
        let y_mean = if opts.intercept {
            y.iter().sum::<f64>() / nf
        } else {
            0.0
        };
        let yw: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        Ok(LassoProblem {
            n,
            cols,
            sq,
            center,
            scale,
            y_mean,
            resid: yw.clone(),
            y: yw,
            beta: vec![0.0; p],
        })
    }

    fn lambda_max(&self) -> f64 {
        let nf = self.n as f64;
        self.cols.iter().map(|c| fabs(dot(c, &self.y)) / nf).fold(0.0, f64::max)
    }

    fn kkt(&self, lambda: f64) -> f64 {
        let nf = self.n as f64;
        let mut worst = 0.0f64;
        for (j, c) in self.cols.iter().enumerate() {
            if self.sq[j] == 0.0 {
                continue;
            }
            let g = dot(c, &self.resid) / nf;
            let b = self.beta[j];
            let v = if b > 0.0 {
                fabs(g - lambda)
            } else if b < 0.0 {
                fabs(g + lambda)
            } else {
                (fabs(g) - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Cyclic coordinate descent from the current coefficients.
    fn solve(&mut self, lambda: f64, opts: &LassoOptions) -> (bool, f64) {
        let nf = self.n as f64;
        for _ in 0..opts.max_sweeps {
            let mut change = 0.0f64;
            for j in 0..self.cols.len() {
                let s = self.sq[j];
                if s == 0.0 {
                    continue;
                }
                let c = &self.cols[j];
                let old = self.beta[j];
                let rho = dot(c, &self.resid) / nf + s * old;
                let new = soft_threshold(rho, lambda) / s;
                let d = new - old;
                if d != 0.0 {
                    crate::matrix::axpy(-d, c, &mut self.resid);
                    self.beta[j] = new;
                    change = change.max(fabs(d));
                }
            }
            if change < opts.tol {
                let k = self.kkt(lambda);
                if k <= opts.kkt_tol {
                    return (true, k);
                }
            }
        }
        (false, self.kkt(lambda))
    }

    fn fitted(&self, lambda: f64, converged: bool, kkt: f64) -> FittedLinear {
        let beta: Vec<f64> = self.beta.iter().zip(&self.scale).map(|(b, s)| b / s).collect();
        let intercept = self.y_mean - dot(&beta, &self.center);
        FittedLinear {
            method: LinearMethod::Lasso,
            beta,
            intercept,
            components: 0,
            lambda,
            converged,
            kkt_residual: kkt,
        }
    }
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Lasso by cyclic coordinate descent with soft-thresholding. A fit that
/// hits the sweep limit is returned with `converged = false`.
pub fn fit_lasso(x: &RowMatrix, y: &[f64], lambda: f64, opts: &LassoOptions) -> Result<FittedLinear> {
    Ok(lasso_path(x, y, &[lambda], opts)?.remove(0))
}

/// Smallest penalty giving β = 0 on the working design.
pub fn lasso_lambda_max(x: &RowMatrix, y: &[f64], opts: &LassoOptions) -> Result<f64> {
    Ok(LassoProblem::new(x, y, opts)?.lambda_max())
}

/// Fits along `lambdas` in the given order, each warm-started from the previous.
pub fn lasso_path(x: &RowMatrix, y: &[f64], lambdas: &[f64], opts: &LassoOptions) -> Result<Vec<FittedLinear>> {
    if lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return config("lasso lambda must be finite and nonnegative");
    }
    let mut prob = LassoProblem::new(x, y, opts)?;
    Ok(lambdas
        .iter()
        .map(|&l| {
            let (ok, kkt) = prob.solve(l, opts);
            prob.fitted(l, ok, kkt)
        })
        .collect())
}

/// `max_j |n⁻¹X_jᵀ(y − Xβ − b)|` adjusted for the sign of `β_j`, on the raw design.
pub fn lasso_kkt_residual(x: &RowMatrix, y: &[f64], fit: &FittedLinear) -> Result<f64> {
    check_len("response length", x.rows, y.len())?;
    let r: Vec<f64> = (0..x.rows).map(|i| y[i] - fit.predict_row(x.row(i))).collect();
    let nf = x.rows as f64;
    let mut worst = 0.0f64;
    for j in 0..x.cols {
        let g = dot(&x.column(j), &r) / nf;
        let b = fit.beta[j];
        let v = if b > 0.0 {
            fabs(g - fit.lambda)
        } else if b < 0.0 {
            fabs(g + fit.lambda)
        } else {
            (fabs(g) - fit.lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

fn center_columns(x: &RowMatrix) -> (RowMatrix, Vec<f64>) {
    let n = x.rows as f64;
    let mut means = vec![0.0; x.cols];
    for i in 0..x.rows {
        crate::matrix::axpy(1.0, x.row(i), &mut means);
    }
    for m in means.iter_mut() {
        *m /= n;
    }
    let mut xc = x.clone();
    for i in 0..x.rows {
        for (v, m) in xc.row_mut(i).iter_mut().zip(&means) {
            *v -= m;
        }
    }
    (xc, means)
}

/// Top-`k` eigenpairs of `n⁻¹XᵀX`, through whichever Gram matrix is smaller.
fn top_right_vectors(x: &RowMatrix, k: usize) -> Result<(Vec<f64>, RowMatrix)> {
    if x.rows <= x.cols {
        return top_eigen_gram(x, k);
    }
    let (vals, vecs) = sym_eigen_desc(gram_cols(x));
    let n = x.rows as f64;
    let mut out = RowMatrix::zeros(x.cols, k);
    let mut eig = Vec::with_capacity(k);
    for c in 0..k {
        let mut v: Vec<f64> = vecs.column(c).iter().copied().collect();
        fix_sign(&mut v);
        for (j, e) in v.iter().enumerate() {
            out.set(j, c, *e);
        }
        eig.push(vals[c].max(0.0) / n);
    }
    Ok((eig, out))
}

/// Loadings `V` (p × k) and coefficients of the centered response on the
/// scores `XcV`; directions with negligible variance get coefficient 0.
fn pcr_core(xc: &RowMatrix, yc: &[f64], k: usize) -> Result<(RowMatrix, Vec<f64>)> {
    let (eig, v) = top_right_vectors(xc, k)?;
    let top = eig.first().copied().unwrap_or(0.0);
    let n = xc.rows as f64;
    let mut gamma = vec![0.0; k];
    for c in 0..k {
        if eig[c] <= 1e-12 * top || eig[c] <= 0.0 {
            continue;
        }
        let col = v.column(c);
        let mut zy = 0.0;
        let mut zz = 0.0;
        for i in 0..xc.rows {
            let z = dot(xc.row(i), &col);
            zy += z * yc[i];
            zz += z * z;
        }
        if zz > 1e-12 * n * top {
            gamma[c] = zy / zz;
        }
    }
    let beta = (0..v.rows).map(|j| dot(v.row(j), &gamma)).collect();
    Ok((v, beta))
}

fn check_components(x: &RowMatrix, k: usize) -> Result<()> {
    let lim = x.rows.min(x.cols);
    if k > lim {
        return config(format!("{k} components exceed min(n, p) = {lim}"));
    }
    Ok(())
}

/// Regression of y on the top-`k` principal component scores of the
/// centered covariates, mapped back to coefficients on x.
pub fn fit_pcr(x: &RowMatrix, y: &[f64], k: usize) -> Result<FittedLinear> {
    check_len("response length", x.rows, y.len())?;
    check_components(x, k)?;
    if x.rows == 0 {
        return config("PCR needs at least one sample");
    }
    let (xc, means) = center_columns(x);
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let beta = if k == 0 {
        vec![0.0; x.cols]
    } else {
        pcr_core(&xc, &yc, k)?.1
    };
    let intercept = y_mean - dot(&beta, &means);
    Ok(FittedLinear {
        components: k,
        ..FittedLinear::plain(LinearMethod::Pcr, beta, intercept)
    })
}

/// PCR on the top-`k` factors plus a Lasso on the factor-residualized
/// covariates, the two coefficient vectors summed.
pub fn fit_farm_lite(x: &RowMatrix, y: &[f64], k: usize, lambda: f64, opts: &LassoOptions) -> Result<FittedLinear> {
    Ok(farm_lite_path(x, y, k, &[lambda], opts)?.remove(0))
}

fn farm_lite_path(
    x: &RowMatrix,
    y: &[f64],
    k: usize,
    lambdas: &[f64],
    opts: &LassoOptions,
) -> Result<Vec<FittedLinear>> {
    check_len("response length", x.rows, y.len())?;
    check_components(x, k)?;
    if x.rows == 0 {
        return config("farm-lite needs at least one sample");
    }
    let (xc, means) = center_columns(x);
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let (v, beta_f) = if k == 0 {
        (RowMatrix::zeros(x.cols, 0), vec![0.0; x.cols])
    } else {
        pcr_core(&xc, &yc, k)?
    };
    // residualized covariates Xc(I − VVᵀ) and response
    let mut xr = xc.clone();
    let mut yr = yc.clone();
    for i in 0..x.rows {
        let row = xc.row(i);
        yr[i] -= dot(row, &beta_f);
        if k > 0 {
            let scores: Vec<f64> = (0..k)
                .map(|c| (0..x.cols).map(|j| row[j] * v.get(j, c)).sum())
                .collect();
            let out = xr.row_mut(i);
            for (j, o) in out.iter_mut().enumerate() {
                *o -= dot(v.row(j), &scores);
            }
        }
    }
    let sparse = lasso_path(&xr, &yr, lambdas, opts)?;
    Ok(sparse
        .into_iter()
        .map(|s| {
            // (I − VVᵀ)β_sparse
            let proj: Vec<f64> = (0..k)
                .map(|c| (0..x.cols).map(|j| v.get(j, c) * s.beta[j]).sum())
                .collect();
            let beta: Vec<f64> = (0..x.cols)
                .map(|j| beta_f[j] + s.beta[j] - dot(v.row(j), &proj))
                .collect();
            let intercept = y_mean + s.intercept - dot(&beta, &means);
            FittedLinear {
                method: LinearMethod::FarmLite,
                beta,
                intercept,
                components: k,
                lambda: s.lambda,
                converged: s.converged,
                kkt_residual: s.kkt_residual,
            }
        })
        .collect())
}

fn valid_mse(fit: &FittedLinear, valid: &Dataset) -> Result<f64> {
    let pred = fit.predict(&valid.x)?;
    Ok(pred.iter().zip(&valid.y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / valid.len().max(1) as f64)
}

fn pick_best(fits: Vec<FittedLinear>, valid: &Dataset, best: &mut Option<(f64, FittedLinear)>) -> Result<()> {
    for f in fits {
        let e = valid_mse(&f, valid)?;
        if best.as_ref().is_none_or(|b| e < b.0) {
            *best = Some((e, f));
        }
    }
    Ok(())
}

/// Geometric grid from `λ_max` down to `λ_max·ratio`.
pub fn lambda_grid(lambda_max: f64, count: usize, ratio: f64) -> Vec<f64> {
    if count <= 1 {
        return vec![lambda_max];
    }
    let step = libm::pow(ratio, 1.0 / (count - 1) as f64);
    (0..count).map(|i| lambda_max * libm::pow(step, i as f64)).collect()
}

/// Lasso with λ chosen on the validation set from a 20-point grid.
pub fn fit_lasso_validated(train: &Dataset, valid: &Dataset, opts: &LassoOptions) -> Result<FittedLinear> {
    let lmax = lasso_lambda_max(&train.x, &train.y, opts)?;
    let grid = lambda_grid(lmax.max(1e-12), 20, 1e-3);
    let mut best = None;
    pick_best(lasso_path(&train.x, &train.y, &grid, opts)?, valid, &mut best)?;
    Ok(best.expect("nonempty grid").1)
}

/// PCR with the number of components chosen on the validation set.
pub fn fit_pcr_validated(train: &Dataset, valid: &Dataset, k_max: usize) -> Result<FittedLinear> {
    let k_max = k_max.min(train.len()).min(train.dim()).max(1);
    let mut best = None;
    for k in 1..=k_max {
        pick_best(vec![fit_pcr(&train.x, &train.y, k)?], valid, &mut best)?;
    }
    Ok(best.expect("nonempty grid").1)
}

/// Farm-lite with k and λ chosen on the validation set.
pub fn fit_farm_lite_validated(
    train: &Dataset,
    valid: &Dataset,
    k_max: usize,
    opts: &LassoOptions,
) -> Result<FittedLinear> {
    let k_max = k_max.min(train.len()).min(train.dim()).max(1);
    let lmax = lasso_lambda_max(&train.x, &train.y, opts)?;
    let grid = lambda_grid(lmax.max(1e-12), 10, 1e-3);
    let mut best = None;
    for k in 1..=k_max {
        pick_best(farm_lite_path(&train.x, &train.y, k, &grid, opts)?, valid, &mut best)?;
    }
    Ok(best.expect("nonempty grid").1)
}
