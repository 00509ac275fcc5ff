use libm::{fabs, log, sqrt};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// `ψ_τ(x) = min(|x|/τ, 1)`.
pub fn clipped_l1(x: f64, tau: f64) -> f64 {
    (fabs(x) / tau).min(1.0)
}

/// Subgradient used by the optimizer: `sign(x)/τ` strictly inside `(−τ, τ)`,
/// zero at the origin and on the plateau.
pub fn clipped_l1_subgrad(x: f64, tau: f64) -> f64 {
    let a = fabs(x);
    if a == 0.0 || a >= tau {
        0.0
    } else if x > 0.0 {
        1.0 / tau
    } else {
        -1.0 / tau
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClippedL1Config {
    pub lambda: f64,
    pub tau: f64,
}

impl Default for ClippedL1Config {
    fn default() -> Self {
        ClippedL1Config {
            lambda: 1e-2,
            tau: 1e-2,
        }
    }
}

impl ClippedL1Config {
    /// Scalings suggested by the rate theory: `λ = log(pn)/n` and
    /// `τ = 1/(p·√n)`.
    pub fn theory(n: usize, p: usize) -> Self {
        let (n, p) = (n as f64, p as f64);
        ClippedL1Config {
            lambda: log(p * n) / n,
            tau: 1.0 / (p * sqrt(n)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return config("clipped-L1 tau must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return config("clipped-L1 lambda must be nonnegative");
        }
        Ok(())
    }

    /// `λ Σ ψ_τ(θ)`.
    pub fn value(&self, theta: &[f64]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        self.lambda * theta.iter().map(|&t| clipped_l1(t, self.tau)).sum::<f64>()
    }
}
