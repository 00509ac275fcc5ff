use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, config, Result};
use crate::matrix::{axpy, dot, gram_rows, norm2, sym_eigen_desc, RowMatrix};
use crate::rng::rng;

/// Fixed p × r̄ projection W; the factor surrogate is `p⁻¹Wᵀx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversifiedProjection {
    pub w: RowMatrix,
    /// Eigenvalues of the sample second-moment matrix behind each column
    /// (empty when W was not estimated by PCA).
    pub eigenvalues: Vec<f64>,
}

impl DiversifiedProjection {
    pub fn from_matrix(w: RowMatrix) -> Self {
        DiversifiedProjection {
            w,
            eigenvalues: Vec::new(),
        }
    }

    pub fn p(&self) -> usize {
        self.w.rows
    }

    pub fn rbar(&self) -> usize {
        self.w.cols
    }

    /// `p⁻¹Wᵀx`.
    pub fn surrogate(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("covariate vector", self.p(), x.len())?;
        let mut out = vec![0.0; self.rbar()];
        self.surrogate_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn surrogate_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.w.row(j), out);
            }
        }
        let inv = 1.0 / self.p() as f64;
        for v in out.iter_mut() {
            *v *= inv;
        }
    }

    /// Surrogates of every row of `x`, n × r̄.
    pub fn surrogate_matrix(&self, x: &RowMatrix) -> Result<RowMatrix> {
        check_len("covariate columns", self.p(), x.cols)?;
        let mut out = RowMatrix::zeros(x.rows, self.rbar());
        for i in 0..x.rows {
            let (src, dst) = (x.row(i), &mut out.data[i * self.rbar()..(i + 1) * self.rbar()]);
            self.surrogate_into(src, dst);
        }
        Ok(out)
    }
}

/// Flip `v` so its largest-magnitude entry (first on ties) is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Top-`k` eigenpairs of `Σ̂ = n⁻¹XᵀX` (uncentered) through the n × n Gram
/// matrix `XXᵀ`: `v = Xᵀa / ‖Xᵀa‖` for each Gram eigenvector `a`. Directions
/// the data cannot determine (zero eigenvalues) are completed to an
/// orthonormal set from the standard basis. Returns eigenvalues and a p × k
/// matrix of unit columns.
pub fn top_eigen_gram(x: &RowMatrix, k: usize) -> Result<(Vec<f64>, RowMatrix)> {
    let (n, p) = (x.rows, x.cols);
    if k > n {
        return config(format!("asked for {k} eigenvectors from {n} samples"));
    }
    if k > p {
        return config(format!("asked for {k} eigenvectors in dimension {p}"));
    }
    let (vals, vecs) = sym_eigen_desc(gram_rows(x));
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let tol = 1e-12 * top.max(f64::MIN_POSITIVE);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut eig = Vec::with_capacity(k);
    for c in 0..k {
        let lam = vals[c];
        if lam > tol {
            let mut v = vec![0.0; p];
            for i in 0..n {
                let a = vecs[(i, c)];
                if a != 0.0 {
                    axpy(a, x.row(i), &mut v);
                }
            }
            let nv = norm2(&v);
            if nv > 0.0 {
                for e in v.iter_mut() {
                    *e /= nv;
                }
                // re-orthogonalize against earlier columns
                for prev in &cols {
                    let d = dot(prev, &v);
                    axpy(-d, prev, &mut v);
                }
                let nv = norm2(&v);
                for e in v.iter_mut() {
                    *e /= nv;
                }
                fix_sign(&mut v);
                cols.push(v);
                eig.push(lam / n as f64);
                continue;
            }
        }
        cols.push(complete_basis(&cols, p)?);
        eig.push(0.0);
    }
    let mut out = RowMatrix::zeros(p, k);
    for (c, v) in cols.iter().enumerate() {
        for j in 0..p {
            out.set(j, c, v[j]);
        }
    }
    Ok((eig, out))
}

fn complete_basis(cols: &[Vec<f64>], p: usize) -> Result<Vec<f64>> {
    for j in 0..p {
        let mut v = vec![0.0; p];
        v[j] = 1.0;
        for prev in cols {
            let d = dot(prev, &v);
            axpy(-d, prev, &mut v);
        }
        let nv = norm2(&v);
        if nv > 0.5 {
            for e in v.iter_mut() {
                *e /= nv;
            }
            fix_sign(&mut v);
            return Ok(v);
        }
    }
    config("cannot complete an orthonormal basis")
}

/// `W̃ = √p [v̂₁, …, v̂_r̄]` from the top eigenvectors of the uncentered sample
/// second-moment matrix of unlabeled covariates.
pub fn estimate_dpm_pca(x_unlabeled: &RowMatrix, rbar: usize) -> Result<DiversifiedProjection> {
    if rbar == 0 {
        return config("r̄ must be at least 1");
    }
    if rbar > x_unlabeled.rows {
        return config(format!("r̄ = {rbar} exceeds the {} unlabeled samples", x_unlabeled.rows));
    }
    let (eig, mut v) = top_eigen_gram(x_unlabeled, rbar)?;
    let s = sqrt(x_unlabeled.cols as f64);
    for e in v.data.iter_mut() {
        *e *= s;
    }
    Ok(DiversifiedProjection { w: v, eigenvalues: eig })
}

/// W with i.i.d. standard normal entries: a projection that ignores the data.
pub fn random_gaussian_projection(p: usize, rbar: usize, seed: u64) -> DiversifiedProjection {
    let mut r = rng(seed);
    DiversifiedProjection::from_matrix(RowMatrix::from_fn(p, rbar, |_, _| StandardNormal.sample(&mut r)))
}

/// `H = p⁻¹WᵀB`.
pub fn projection_matrix_h(w: &DiversifiedProjection, loading: &RowMatrix) -> Result<RowMatrix> {
    let mut h = w.w.tmatmul(loading)?;
    let inv = 1.0 / w.p() as f64;
    for v in h.data.iter_mut() {
        *v *= inv;
    }
    Ok(h)
}

/// Singular values of a matrix, descending, via the eigenvalues of the
/// smaller of `HᵀH` and `HHᵀ`.
pub fn singular_values(h: &RowMatrix) -> Vec<f64> {
    let m = if h.cols <= h.rows {
        let d = h.to_dmatrix();
        d.transpose() * d
    } else {
        let d = h.to_dmatrix();
        &d * d.transpose()
    };
    let (vals, _) = sym_eigen_desc(DMatrix::from(m));
    vals.into_iter().map(|v| sqrt(v.max(0.0))).collect()
}

/// `(ν_min(H), ν_max(H))` for `H = p⁻¹WᵀB`.
pub fn projection_diagnostics(w: &DiversifiedProjection, loading: &RowMatrix) -> Result<(f64, f64)> {
    let s = singular_values(&projection_matrix_h(w, loading)?);
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.last().copied().unwrap_or(0.0);
    Ok((min, max))
}
