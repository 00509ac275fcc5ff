use alloc::vec::Vec;
use core::f64::consts::PI;
use libm::{cos, exp, fabs, log, sin, sqrt, tan};
use serde::{Deserialize, Serialize};

/// Univariate building blocks of the additive regression function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Candidate {
    /// cos(πx)
    CosPi,
    /// sin(x)
    Sin,
    /// (1 − |x|)²
    SquaredTent,
    /// 1 / (1 + e^{−x})
    Sigmoid,
    /// 2√|x| − 1
    SqrtAbs,
}

pub const CANDIDATES: [Candidate; 5] = [
    Candidate::CosPi,
    Candidate::Sin,
    Candidate::SquaredTent,
    Candidate::Sigmoid,
    Candidate::SqrtAbs,
];

impl Candidate {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Candidate::CosPi => cos(PI * x),
            Candidate::Sin => sin(x),
            Candidate::SquaredTent => {
                let t = 1.0 - fabs(x);
                t * t
            }
            Candidate::Sigmoid => 1.0 / (1.0 + exp(-x)),
            Candidate::SqrtAbs => 2.0 * sqrt(fabs(x)) - 1.0,
        }
    }
}

/// Σ_j assignment[j](f_j).
pub fn regression_additive_random(f: &[f64], assignment: &[Candidate]) -> f64 {
    f.iter().zip(assignment).map(|(&v, c)| c.eval(v)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FastKind {
    /// Alternating-sign linear function of four factors and five idiosyncratics.
    Linear,
    /// Hierarchical nonlinear function of four factors and five idiosyncratics.
    Composite,
}

/// `f` holds at least four factors and `u` the first five idiosyncratic
/// components.
pub fn regression_fast(kind: FastKind, f: &[f64], u: &[f64]) -> f64 {
    match kind {
        FastKind::Linear => {
            let a: f64 = (0..4).map(|i| if i % 2 == 0 { f[i] } else { -f[i] }).sum();
            let b: f64 = (0..5).map(|j| if j % 2 == 0 { -u[j] } else { u[j] }).sum();
            a + b
        }
        FastKind::Composite => {
            f[0] * f[1] * f[1] - f[2]
                + log(8.0 + f[3] + 4.0 * u[0] + exp(u[1] * u[2] - 5.0 * u[0]))
                + tan(u[3] + 0.1)
                + sin(u[4])
        }
    }
}

/// Sparse additive function with a factor part, two idiosyncratic terms and
/// one raw-covariate term: Σ_k c_k(f_k) + 1.5 sin(πu₁) + 2(|u₂| − ½) + tanh(x₃),
/// the factor candidates cycling through [`CANDIDATES`].
pub fn regression_fanam(f: &[f64], u: &[f64], x3: f64) -> f64 {
    let factor: f64 = f
        .iter()
        .enumerate()
        .map(|(k, &v)| CANDIDATES[k % CANDIDATES.len()].eval(v))
        .sum();
    factor + 1.5 * sin(PI * u[0]) + 2.0 * (fabs(u[1]) - 0.5) + libm::tanh(x3)
}

/// Regression function of a simulated design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionFn {
    /// Additive in the factors with candidates drawn per design.
    AdditiveRandom,
    Fast1,
    Fast2,
    /// m* ≡ 0.
    Null,
    /// Sparse additive factor-augmented function.
    FanamAdditive,
}

impl RegressionFn {
    /// Idiosyncratic coordinates the function depends on (0-based).
    pub fn important(self) -> Vec<usize> {
        match self {
            RegressionFn::Fast1 | RegressionFn::Fast2 => (0..5).collect(),
            RegressionFn::FanamAdditive => (0..3).collect(),
            RegressionFn::AdditiveRandom | RegressionFn::Null => Vec::new(),
        }
    }

    pub fn min_factors(self) -> usize {
        match self {
            RegressionFn::Fast1 | RegressionFn::Fast2 => 4,
            _ => 1,
        }
    }
}
