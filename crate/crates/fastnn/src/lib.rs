//! Experiment runner, CSV and TOML formats, and the `fastnn` command line.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod realdata;
