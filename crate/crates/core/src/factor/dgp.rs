use alloc::format;
use alloc::vec::Vec;
use libm::sqrt;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::regression::{
    regression_additive_random, regression_fanam, regression_fast, Candidate, FastKind, RegressionFn, CANDIDATES,
};
use crate::data::{Dataset, Latent};
use crate::error::{check_len, config, Result};
use crate::matrix::{dot, RowMatrix};
use crate::rng::{rng, tag_seed, Rng};

/// Distribution of the i.i.d. coordinates of factors or idiosyncratics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Law {
    Uniform { half_width: f64 },
    Gaussian { sd: f64 },
}

impl Law {
    pub fn sample(&self, r: &mut Rng) -> f64 {
        match *self {
            Law::Uniform { half_width } => half_width * (2.0 * r.gen::<f64>() - 1.0),
            Law::Gaussian { sd } => {
                let z: f64 = StandardNormal.sample(r);
                sd * z
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Law::Uniform { half_width } => half_width * half_width / 3.0,
            Law::Gaussian { sd } => sd * sd,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Law::Uniform { half_width } => half_width > 0.0 && half_width.is_finite(),
            Law::Gaussian { sd } => sd > 0.0 && sd.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            config(format!("invalid law {self:?}"))
        }
    }
}

/// Parameters of a simulated factor design (the loading matrix is drawn from
/// the seed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSpec {
    pub p: usize,
    pub r: usize,
    pub factor_law: Law,
    pub idio_law: Law,
    pub noise_var: f64,
    pub regression: RegressionFn,
}

impl DgpSpec {
    /// Additive factor regression with uniform factors and idiosyncratics on
    /// [−1, 1] and noise variance 0.3.
    pub fn additive(p: usize) -> Self {
        DgpSpec {
            p,
            r: 5,
            factor_law: Law::Uniform { half_width: 1.0 },
            idio_law: Law::Uniform { half_width: 1.0 },
            noise_var: 0.3,
            regression: RegressionFn::AdditiveRandom,
        }
    }

    /// Four factors and a function of the factors and five idiosyncratics.
    pub fn fast(p: usize, kind: FastKind) -> Self {
        DgpSpec {
            r: 4,
            regression: match kind {
                FastKind::Linear => RegressionFn::Fast1,
                FastKind::Composite => RegressionFn::Fast2,
            },
            ..Self::additive(p)
        }
    }

    /// Pure noise response with unit-variance factors (uniform on [−√3, √3])
    /// and standard normal idiosyncratics.
    pub fn null_case(p: usize) -> Self {
        DgpSpec {
            p,
            r: 5,
            factor_law: Law::Uniform { half_width: sqrt(3.0) },
            idio_law: Law::Gaussian { sd: 1.0 },
            noise_var: 1.0,
            regression: RegressionFn::Null,
        }
    }

    pub fn fanam(p: usize) -> Self {
        DgpSpec {
            regression: RegressionFn::FanamAdditive,
            ..Self::additive(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.r == 0 {
            return config("p and r must be positive");
        }
        if self.r < self.regression.min_factors() {
            return config(format!(
                "{:?} needs at least {} factors",
                self.regression,
                self.regression.min_factors()
            ));
        }
        if self.p < self.regression.important().len() {
            return config(format!(
                "{:?} needs p >= {}",
                self.regression,
                self.regression.important().len()
            ));
        }
        if !(self.noise_var >= 0.0 && self.noise_var.is_finite()) {
            return config("noise variance must be finite and nonnegative");
        }
        self.factor_law.validate()?;
        self.idio_law.validate()
    }
}

/// A seeded factor design: x = Bf + u, y = m*(f, u_J) + ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorDgp {
    pub spec: DgpSpec,
    /// p × r loading matrix.
    pub loading: RowMatrix,
    /// Candidate functions of the additive design, one per factor.
    pub assignment: Vec<Candidate>,
    pub seed: u64,
}

impl FactorDgp {
    /// Draw the loadings i.i.d. uniform on [−√3, √3] and, for the additive
    /// design, the candidate assignment.
    pub fn new(spec: DgpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut lr = rng(tag_seed(seed, "loading"));
        let s3 = sqrt(3.0);
        let loading = RowMatrix::from_fn(spec.p, spec.r, |_, _| s3 * (2.0 * lr.gen::<f64>() - 1.0));
        let mut ar = rng(tag_seed(seed, "assignment"));
        let assignment = (0..spec.r)
            .map(|_| CANDIDATES[ar.gen_range(0..CANDIDATES.len())])
            .collect();
        Ok(FactorDgp {
            spec,
            loading,
            assignment,
            seed,
        })
    }

    pub fn with_loading(spec: DgpSpec, loading: RowMatrix, assignment: Vec<Candidate>, seed: u64) -> Result<Self> {
        spec.validate()?;
        check_len("loading rows", spec.p, loading.rows)?;
        check_len("loading columns", spec.r, loading.cols)?;
        check_len("candidate assignment", spec.r, assignment.len())?;
        Ok(FactorDgp {
            spec,
            loading,
            assignment,
            seed,
        })
    }

    pub fn p(&self) -> usize {
        self.spec.p
    }

    pub fn r(&self) -> usize {
        self.spec.r
    }

    /// Regression function at factor vector `f` and full idiosyncratic vector `u`.
    pub fn regression_value(&self, f: &[f64], u: &[f64]) -> f64 {
        match self.spec.regression {
            RegressionFn::AdditiveRandom => regression_additive_random(f, &self.assignment),
            RegressionFn::Fast1 => regression_fast(FastKind::Linear, f, u),
            RegressionFn::Fast2 => regression_fast(FastKind::Composite, f, u),
            RegressionFn::Null => 0.0,
            RegressionFn::FanamAdditive => {
                let x3 = dot(self.loading.row(2), f) + u[2];
                regression_fanam(f, u, x3)
            }
        }
    }

    /// `n` samples from the stream labelled `stream` (e.g. "train", "test-3").
    pub fn generate(&self, n: usize, stream: &str) -> Dataset {
        let mut r = rng(tag_seed(self.seed, stream));
        self.generate_with(n, &mut r)
    }

    /// Per sample: factors, then idiosyncratics, then noise.
    pub fn generate_with(&self, n: usize, r: &mut Rng) -> Dataset {
        let (p, k) = (self.p(), self.r());
        let important = self.spec.regression.important();
        let sd = sqrt(self.spec.noise_var);
        let mut x = RowMatrix::zeros(n, p);
        let mut factors = RowMatrix::zeros(n, k);
        let mut idio = RowMatrix::zeros(n, important.len());
        let mut y = Vec::with_capacity(n);
        let mut truth = Vec::with_capacity(n);
        let mut noise = Vec::with_capacity(n);
        let mut u = alloc::vec![0.0; p];
        for i in 0..n {
            let f = factors.row_mut(i);
            for v in f.iter_mut() {
                *v = self.spec.factor_law.sample(r);
            }
            for v in u.iter_mut() {
                *v = self.spec.idio_law.sample(r);
            }
            let f = factors.row(i).to_vec();
            let xr = x.row_mut(i);
            for j in 0..p {
                xr[j] = dot(self.loading.row(j), &f) + u[j];
            }
            for (c, &j) in important.iter().enumerate() {
                idio.set(i, c, u[j]);
            }
            let m = self.regression_value(&f, &u);
            let e = if sd > 0.0 {
                let z: f64 = StandardNormal.sample(r);
                sd * z
            } else {
                0.0
            };
            truth.push(m);
            noise.push(e);
            y.push(m + e);
        }
        Dataset {
            x,
            y,
            latent: Some(Latent {
                factors,
                idio,
                important,
                truth,
                noise,
            }),
        }
    }
}
