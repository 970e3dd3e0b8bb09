//! Command-line experiments for optimal budgeted rejection sampling.
//!
//! Every command writes CSV files with a header row and a
//! `<command>_manifest.json` recording the resolved arguments, seed,
//! outputs, summary results and the numerical checks it asserts.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod output;

pub use commands::execute;
pub use error::{CliError, Result};
pub use manifest::RunManifest;
