//! Factor-augmented neural regression.
//!
//! The crate covers the numerical side of the project and builds without the
//! standard library (it needs `alloc`):
//!
//! * [`net`], [`optim`], [`train`]: dense ReLU networks with output truncation,
//!   backpropagation, Adam and a mini-batch trainer with validation checkpoints.
//! * [`netbuild`]: hand-constructed ReLU networks (gadgets, exact point fitting,
//!   index creation, median and product networks) with declared size bounds.
//! * [`factor`]: factor-model data generation, the regression-function library,
//!   PCA-based diversified projections and their diagnostics.
//! * [`estimators`]: FAR-NN, FAST-NN, FANAM, neural baselines and linear baselines.
//! * [`metrics`]: test MSE against the latent truth and out-of-sample R².
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod estimators;
pub mod factor;
pub mod matrix;
pub mod metrics;
pub mod net;
pub mod netbuild;
pub mod optim;
pub mod rng;
mod serde_inf;
pub mod train;

pub use data::Dataset;
pub use error::{Error, Result};
pub use matrix::RowMatrix;
pub use net::{DenseReluNet, InitScheme, Layer};
