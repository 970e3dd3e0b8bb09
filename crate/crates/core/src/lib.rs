//! Optimal budgeted rejection sampling.
//!
//! Given a proposal `P̂` and a target `P` with an analytic likelihood ratio
//! `r = p/p̂`, the OBRS acceptance function `a(x) = min(r(x)·c_K/M, 1)` is the
//! acceptance function with expected rate `1/K` that minimizes every
//! f-divergence `D_f(P‖P̃)` to the refined distribution `P̃ ∝ p̂·a`
//! simultaneously. This crate computes it exactly on finite supports and on
//! 1D Gaussian mixtures through deterministic quadrature, and provides the
//! analysis around it:
//!
//! - [`fdiv`]: f-divergence generators, primal/dual values, Rényi and
//!   max-divergence.
//! - [`dist`]: finite distributions, Gaussian mixtures, likelihood ratios and
//!   the named experiment families.
//! - [`obrs`]: acceptance functions, the `c_K` bisection solver, rejection
//!   sampling and refined distributions.
//! - [`prcurve`]: precision-recall curves and their exact transform under
//!   OBRS.
//! - [`oracle`]: brute-force optimality sweeps and improvement-bound checks.
//! - [`landscape`]: the budget-aware training loss over parametric model
//!   families, loss landscapes and grid fits.
//!
//! ```
//! use obrs_core::dist::{FiniteDist, MassPair};
//! use obrs_core::obrs::{refine_pair, solve_c_k_pair};
//!
//! let p = FiniteDist::new(vec![0.5, 0.5]).unwrap();
//! let q = FiniteDist::new(vec![0.8, 0.2]).unwrap();
//! let pair = MassPair::from_finite(&p, &q).unwrap();
//! let sol = solve_c_k_pair(&pair, 2.0).unwrap();
//! assert!((sol.c_k - 1.5).abs() < 1e-12);
//! let refined = refine_pair(&pair, &sol.spec()).unwrap();
//! assert!((refined.probs()[0] - 0.6).abs() < 1e-12);
//! ```

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod fdiv;
pub mod landscape;
pub mod numeric;
pub mod obrs;
pub mod oracle;
pub mod prcurve;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
