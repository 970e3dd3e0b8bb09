//! Precision-recall curves between a target `P` and a model `Q`.
//!
//! For `λ ∈ [0, ∞]`,
//!
//! ```text
//! α_λ = E_Q[min(λ p/q, 1)] = Σ min(λ p, q)      (precision)
//! β_λ = E_P[min(1, q/(λ p))] = Σ min(p, q/λ)    (recall)
//! ```
//!
//! so `α_λ = λ β_λ`. The endpoints are `(0, P(q > 0))` at `λ = 0` and
//! `(Q(p > 0), 0)` at `λ = ∞`.
//!
//! Refining `Q` with an OBRS acceptance `min(s r, 1)` at rate `1/K` maps the
//! base curve point at `λ'` to the refined point at `λ = Kλ'`:
//!
//! - `λ' ≤ s`: `(min(1, Kα_{λ'}), β_{λ'})`, a vertical scaling;
//! - `λ' > s`: `(1, 1/λ)`, full precision.
//!
//! [`verify_pr_transform`] checks this against PR curves computed directly from
//! the refined distribution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, MassPair, PairSource, RatioFn};
use crate::error::{Error, Result};
use crate::numeric::{log_grid, sum_compensated, RunningStats};
use crate::obrs::{refine_pair, solve_c_k_pair, AcceptanceSpec, CkSolution};

/// How a curve was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Exact,
    Quadrature,
    Mc,
}

impl EvalMode {
    pub fn of_pair(pair: &MassPair) -> Self {
        match pair.source() {
            PairSource::Exact => EvalMode::Exact,
            PairSource::Quadrature(_) => EvalMode::Quadrature,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EvalMode::Exact => "exact",
            EvalMode::Quadrature => "quadrature",
            EvalMode::Mc => "mc",
        }
    }
}

/// One `(α_λ, β_λ)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub stderr_alpha: f64,
    pub stderr_beta: f64,
}

impl PrPoint {
    fn exact(lambda: f64, alpha: f64, beta: f64) -> Self {
        Self {
            lambda,
            alpha,
            beta,
            stderr_alpha: 0.0,
            stderr_beta: 0.0,
        }
    }

    /// `|α − λβ|`, zero at the endpoints `λ ∈ {0, ∞}`.
    pub fn identity_residual(&self) -> f64 {
        if self.lambda == 0.0 || self.lambda.is_infinite() {
            0.0
        } else {
            (self.alpha - self.lambda * self.beta).abs()
        }
    }
}

/// A PR curve sorted by `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub mode: EvalMode,
    /// Sample size per side for Monte Carlo curves, zero otherwise.
    pub n: usize,
}

impl PrCurve {
    /// Largest violation of `α` nondecreasing and `β` nonincreasing in `λ`.
    pub fn monotonicity_violation(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[0].alpha - w[1].alpha).max(w[1].beta - w[0].beta).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn max_identity_residual(&self) -> f64 {
        self.points.iter().map(PrPoint::identity_residual).fold(0.0, f64::max)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    Ok(())
}

/// Exact `(α_λ, β_λ)` on a mass pair `(P, Q)`.
pub fn pr_point_pair(pair: &MassPair, lambda: f64) -> Result<PrPoint> {
    check_lambda(lambda)?;
    let (lp, lq) = (pair.ln_p(), pair.ln_q());
    let ninf = f64::NEG_INFINITY;
    if lambda == 0.0 {
        let beta = sum_compensated(lp.iter().zip(lq).filter(|(_, q)| **q > ninf).map(|(p, _)| p.exp()));
        return Ok(PrPoint::exact(0.0, 0.0, beta));
    }
    if lambda.is_infinite() {
        let alpha = sum_compensated(lp.iter().zip(lq).filter(|(p, _)| **p > ninf).map(|(_, q)| q.exp()));
        return Ok(PrPoint::exact(lambda, alpha, 0.0));
    }
    let ll = lambda.ln();
    let alpha = sum_compensated(lp.iter().zip(lq).map(|(p, q)| (ll + p).min(*q).exp()));
    let beta = sum_compensated(lp.iter().zip(lq).map(|(p, q)| p.min(q - ll).exp()));
    Ok(PrPoint::exact(lambda, alpha, beta))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("lambda grid must be sorted".into()));
    }
    grid.iter().try_for_each(|l| check_lambda(*l))
}

/// Exact or quadrature PR curve of a mass pair.
pub fn pr_curve_pair(pair: &MassPair, grid: &[f64]) -> Result<PrCurve> {
    check_grid(grid)?;
    let points = grid
        .iter()
        .map(|l| pr_point_pair(pair, *l))
        .collect::<Result<Vec<_>>>()?;
    Ok(PrCurve {
        points,
        mode: EvalMode::of_pair(pair),
        n: 0,
    })
}

/// Monte Carlo PR curve from `n` draws of each of `P` and `Q`, shared across
/// the grid. `ratio` is `p/q`.
pub fn pr_curve_mc<D, R>(p: &D, q: &D, ratio: &R, grid: &[f64], n: usize, seed: u64) -> Result<PrCurve>
where
    D: Distribution,
    R: RatioFn<D::Point>,
{
    check_grid(grid)?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 samples, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let from_q = (0..n)
        .map(|_| ratio.ln_ratio(&q.draw(&mut rng)))
        .collect::<Result<Vec<f64>>>()?;
    let from_p = (0..n)
        .map(|_| ratio.ln_ratio(&p.draw(&mut rng)))
        .collect::<Result<Vec<f64>>>()?;
    let points = grid
        .iter()
        .map(|&lambda| {
            let ll = lambda.ln();
            let a: RunningStats = from_q.iter().map(|lr| (ll + lr).min(0.0).exp()).collect();
            let b: RunningStats = from_p.iter().map(|lr| (-ll - lr).min(0.0).exp()).collect();
            PrPoint {
                lambda,
                alpha: a.mean(),
                beta: b.mean(),
                stderr_alpha: a.stderr(),
                stderr_beta: b.stderr(),
            }
        })
        .collect();
    Ok(PrCurve {
        points,
        mode: EvalMode::Mc,
        n,
    })
}

/// Log grid of 201 points on `[1e−3·M/c_K, 1e3·M/c_K]`, given `ln(c_K/M)`.
pub fn default_lambda_grid(ln_scale: f64) -> Vec<f64> {
    let centre = (-ln_scale).exp();
    log_grid(1e-3 * centre, 1e3 * centre, 201)
}

/// Predicted PR curve of the OBRS-refined model from the base curve.
/// Each base point at `λ'` becomes the refined point at `Kλ'`.
pub fn pr_transform(base: &PrCurve, spec: &AcceptanceSpec) -> Result<PrCurve> {
    let (k, ln_c, ln_m) = match *spec {
        AcceptanceSpec::Obrs { k, ln_c, ln_m } => (k, ln_c, ln_m),
        other => {
            return Err(Error::InvalidParameter(format!(
                "the PR transform needs an OBRS acceptance, got {other:?}"
            )))
        }
    };
    if k.ln() > ln_m + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "the PR transform needs K <= M (K = {k}, M = {})",
            ln_m.exp()
        )));
    }
    let ln_s = ln_c - ln_m;
    let points = base
        .points
        .iter()
        .map(|pt| {
            let lambda = k * pt.lambda;
            if pt.lambda == 0.0 || pt.lambda.ln() <= ln_s {
                PrPoint {
                    lambda,
                    alpha: (k * pt.alpha).min(1.0),
                    beta: pt.beta,
                    stderr_alpha: k * pt.stderr_alpha,
                    stderr_beta: pt.stderr_beta,
                }
            } else {
                PrPoint::exact(lambda, 1.0, 1.0 / lambda)
            }
        })
        .collect();
    Ok(PrCurve {
        points,
        mode: base.mode,
        n: base.n,
    })
}

/// Outcome of comparing predicted and directly computed refined curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrTransformReport {
    pub k: f64,
    pub solution: CkSolution,
    /// `K·c_K/M`, the boundary between the two regimes.
    pub regime_boundary: f64,
    pub max_dalpha: f64,
    pub max_dbeta: f64,
    /// Largest `|α − λβ|` over base, predicted and direct curves.
    pub max_identity_residual: f64,
    /// `min(α_refined(Kλ') − α_base(λ'))`; nonnegative when OBRS improves
    /// precision everywhere.
    pub min_precision_gain: f64,
    pub n_points: usize,
    pub mode: EvalMode,
    pub base: PrCurve,
    pub predicted: PrCurve,
    pub direct: PrCurve,
}

impl PrTransformReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_dalpha.max(self.max_dbeta)
    }
}

/// Builds the OBRS-refined model for budget `K`, computes its PR curve on
/// `grid` directly, and compares it with the transform of the base curve
/// evaluated at `grid/K`.
pub fn verify_pr_transform(pair: &MassPair, k: f64, grid: &[f64]) -> Result<PrTransformReport> {
    let solution = solve_c_k_pair(pair, k)?;
    let spec = solution.spec();
    let refined = refine_pair(pair, &spec)?;
    let refined_pair = refined.target_pair(pair)?;
    let base_grid: Vec<f64> = grid.iter().map(|l| l / k).collect();
    let base = pr_curve_pair(pair, &base_grid)?;
    let predicted = pr_transform(&base, &spec)?;
    let direct = pr_curve_pair(&refined_pair, grid)?;
    let mut max_dalpha: f64 = 0.0;
    let mut max_dbeta: f64 = 0.0;
    let mut min_gain = f64::INFINITY;
    for ((pr, di), b) in predicted.points.iter().zip(&direct.points).zip(&base.points) {
        max_dalpha = max_dalpha.max((pr.alpha - di.alpha).abs());
        max_dbeta = max_dbeta.max((pr.beta - di.beta).abs());
        min_gain = min_gain.min(di.alpha - b.alpha);
    }
    let max_identity_residual = [&base, &predicted, &direct]
        .iter()
        .map(|c| c.max_identity_residual())
        .fold(0.0, f64::max);
    Ok(PrTransformReport {
        k,
        regime_boundary: k * solution.ln_scale().exp(),
        solution,
        max_dalpha,
        max_dbeta,
        max_identity_residual,
        min_precision_gain: min_gain,
        n_points: grid.len(),
        mode: EvalMode::of_pair(pair),
        base,
        predicted,
        direct,
    })
}
