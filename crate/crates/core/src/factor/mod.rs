//! Factor-model designs, the regression-function library and diversified
//! projections estimated by PCA.

pub mod dgp;
pub mod dpm;
pub mod regression;

pub use dgp::{DgpSpec, FactorDgp, Law};
pub use dpm::{
    estimate_dpm_pca, fix_sign, projection_diagnostics, projection_matrix_h, random_gaussian_projection,
    singular_values, top_eigen_gram, DiversifiedProjection,
};
pub use regression::{regression_additive_random, regression_fast, Candidate, FastKind, RegressionFn};
