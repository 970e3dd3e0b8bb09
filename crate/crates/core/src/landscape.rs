//! The budget-aware training loss and its landscapes.
//!
//! For a model `P̂` refined by OBRS at budget `K`, the divergence to the
//! target can be written without forming `P̃`:
//!
//! ```text
//! D_f(P‖P̃) = E_P̂[K a(x) f(r(x) / (K a(x)))]
//! ```
//!
//! [`twobrs_loss`] evaluates this expectation, using the achieved rate `Z` in
//! place of `1/K` so that it also covers `K ≥ M`, where the rate exceeds
//! `1/K`. Continuous models are integrated with the deterministic quadrature
//! of [`MassPair::from_quadrature`].
//!
//! [`landscape_1d`] sweeps the spacing `θ` of the ten-mode model family and
//! [`fit_grid`] sweeps `(μ, σ)` of a single Gaussian against a two-mode
//! target.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{ten_mode_family_with, FiniteDist, GaussianMixture, MassPair, Quadrature, TEN_MODE_TARGET_SPACING};
use crate::error::{Error, Result};
use crate::fdiv::{divergence_finite, Generator};
use crate::numeric::{linear_grid, log_sum_exp, sum_compensated};
use crate::obrs::{refined_finite, solve_c_k_pair};

/// `E_P̂[K a f(r/(K a))]` with the OBRS acceptance for budget `k`, where `K`
/// is the reciprocal of the achieved acceptance rate.
pub fn twobrs_loss(generator: &Generator, pair: &MassPair, k: f64) -> Result<f64> {
    let spec = solve_c_k_pair(pair, k)?.spec();
    let ln_ka: Vec<f64> = (0..pair.len()).map(|j| spec.ln_accept(pair.ln_ratio(j))).collect();
    let joint: Vec<f64> = pair.ln_q().iter().zip(&ln_ka).map(|(q, a)| q + a).collect();
    let ln_z = log_sum_exp(&joint);
    if ln_z == f64::NEG_INFINITY {
        return Err(Error::ZeroNormalizer);
    }
    // q·(a/Z)·f(p/(q a/Z)) is the perspective at (p, q a/Z).
    Ok(sum_compensated(
        pair.ln_p()
            .iter()
            .zip(&joint)
            .map(|(lp, lj)| generator.perspective_ln(*lp, lj - ln_z)),
    ))
}

/// [`twobrs_loss`] on finite distributions.
pub fn twobrs_loss_finite(generator: &Generator, p: &FiniteDist, q: &FiniteDist, k: f64) -> Result<f64> {
    twobrs_loss(generator, &MassPair::from_finite(p, q)?, k)
}

/// `|twobrs_loss − D_f(P‖P̃)|`, with `P̃` built atom by atom from the ratio.
pub fn primal_identity_check(generator: &Generator, p: &FiniteDist, q: &FiniteDist, k: f64) -> Result<f64> {
    let loss = twobrs_loss_finite(generator, p, q, k)?;
    let pair = MassPair::from_finite(p, q)?;
    let spec = solve_c_k_pair(&pair, k)?.spec();
    let ratio = crate::dist::ratio(p, q)?;
    let refined = refined_finite(q, &ratio, &spec)?;
    let tilde = FiniteDist::from_weights(&refined.probs())?;
    let direct = divergence_finite(generator, p, &tilde)?.value;
    Ok((loss - direct).abs())
}

/// Losses over a `θ × K` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossSurface {
    pub thetas: Vec<f64>,
    pub budgets: Vec<f64>,
    /// `losses[i][b]` at `thetas[i]`, `budgets[b]`.
    pub losses: Vec<Vec<f64>>,
    pub generator: Generator,
    pub quadrature: Quadrature,
    pub target_spacing: f64,
}

impl LossSurface {
    /// Losses at `budgets[b]` across `θ`.
    pub fn column(&self, b: usize) -> Vec<f64> {
        self.losses.iter().map(|row| row[b]).collect()
    }

    /// Largest increase of the loss along increasing budget, over all rows.
    /// Budgets are compared in sorted order.
    pub fn monotonicity_violation(&self) -> f64 {
        let mut order: Vec<usize> = (0..self.budgets.len()).collect();
        order.sort_by(|a, b| self.budgets[*a].total_cmp(&self.budgets[*b]));
        self.losses
            .iter()
            .flat_map(|row| order.windows(2).map(move |w| row[w[1]] - row[w[0]]))
            .fold(0.0, f64::max)
    }

    /// Index of the smallest loss in column `b`, first on ties.
    pub fn argmin(&self, b: usize) -> usize {
        argmin_first(&self.column(b))
    }

    /// Minima per budget column, ignoring plateau noise below [`PLATEAU_TOL`].
    pub fn local_minima(&self) -> Vec<usize> {
        (0..self.budgets.len())
            .map(|b| local_minima_count_tol(&self.column(b), PLATEAU_TOL))
            .collect()
    }
}

fn argmin_first(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

fn check_budgets(budgets: &[f64]) -> Result<()> {
    if budgets.is_empty() {
        return Err(Error::InvalidParameter("no budgets given".into()));
    }
    if let Some(k) = budgets.iter().find(|k| !(**k >= 1.0) || k.is_infinite()) {
        return Err(Error::InvalidParameter(format!(
            "budget K must be finite and >= 1, got {k}"
        )));
    }
    Ok(())
}

/// Default `θ` grid: 241 points on `[0.1, 2.5]`.
pub fn default_theta_grid() -> Vec<f64> {
    linear_grid(0.1, 2.5, 241)
}

/// Default budgets for landscapes.
pub const DEFAULT_BUDGETS: [f64; 3] = [1.0, 2.0, 5.0];

/// Loss of the ten-mode model with spacing `θ` against the ten-mode target,
/// for every `θ` and budget.
pub fn landscape_1d(thetas: &[f64], budgets: &[f64], generator: &Generator, quad: &Quadrature) -> Result<LossSurface> {
    landscape_1d_with(thetas, budgets, generator, quad, TEN_MODE_TARGET_SPACING)
}

/// As [`landscape_1d`] with an explicit target spacing.
pub fn landscape_1d_with(
    thetas: &[f64],
    budgets: &[f64],
    generator: &Generator,
    quad: &Quadrature,
    target_spacing: f64,
) -> Result<LossSurface> {
    check_budgets(budgets)?;
    let losses = thetas
        .par_iter()
        .map(|&theta| {
            let (p, q) = ten_mode_family_with(theta, target_spacing)?;
            let pair = MassPair::from_quadrature(&p, &q, quad)?;
            budgets
                .iter()
                .map(|k| twobrs_loss(generator, &pair, *k))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LossSurface {
        thetas: thetas.to_vec(),
        budgets: budgets.to_vec(),
        losses,
        generator: *generator,
        quadrature: *quad,
        target_spacing,
    })
}

/// Number of strict interior minima: entries smaller than both neighbours.
pub fn local_minima_count(losses: &[f64]) -> usize {
    local_minima_count_tol(losses, 0.0)
}

/// Rounding noise on a flat stretch of a quadrature landscape, well above
/// the spread of sums near `f(1)` and well below any real basin.
pub const PLATEAU_TOL: f64 = 1e-10;

/// Interior minima whose neighbours are both larger by more than `tol`.
pub fn local_minima_count_tol(losses: &[f64], tol: f64) -> usize {
    losses
        .windows(3)
        .filter(|w| w[0] - w[1] > tol && w[2] - w[1] > tol)
        .count()
}

/// A `(μ, σ)` lattice, `μ` outer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitGrid {
    pub mu_lo: f64,
    pub mu_hi: f64,
    pub mu_n: usize,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub sigma_n: usize,
}

impl Default for FitGrid {
    /// `μ ∈ [−3, 3]` at 121 points, `σ ∈ [0.2, 3]` at 141 points.
    fn default() -> Self {
        Self {
            mu_lo: -3.0,
            mu_hi: 3.0,
            mu_n: 121,
            sigma_lo: 0.2,
            sigma_hi: 3.0,
            sigma_n: 141,
        }
    }
}

impl FitGrid {
    pub fn mus(&self) -> Vec<f64> {
        linear_grid(self.mu_lo, self.mu_hi, self.mu_n)
    }

    pub fn sigmas(&self) -> Vec<f64> {
        linear_grid(self.sigma_lo, self.sigma_hi, self.sigma_n)
    }

    pub fn len(&self) -> usize {
        self.mu_n * self.sigma_n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidParameter("empty fit grid".into()));
        }
        if !(self.sigma_lo > 0.0) || self.sigma_hi < self.sigma_lo || self.mu_hi < self.mu_lo {
            return Err(Error::InvalidParameter(format!("invalid fit grid {self:?}")));
        }
        Ok(())
    }
}

/// Grid-search fit of a single Gaussian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub mu: f64,
    pub sigma: f64,
    pub loss: f64,
    pub k: f64,
    /// `(μ index, σ index)` of the minimum.
    pub index: (usize, usize),
    pub grid: FitGrid,
    /// Row-major losses, `μ` outer.
    pub losses: Vec<f64>,
}

impl FitResult {
    pub fn loss_at(&self, i_mu: usize, i_sigma: usize) -> f64 {
        self.losses[i_mu * self.grid.sigma_n + i_sigma]
    }
}

/// Loss of `N(μ, σ²)` refined at budget `k` against `target`, on a quadrature
/// grid covering both.
pub fn gaussian_fit_loss(
    generator: &Generator,
    target: &GaussianMixture,
    mu: f64,
    sigma: f64,
    k: f64,
    quad: &Quadrature,
) -> Result<f64> {
    let model = GaussianMixture::gaussian_1d(mu, sigma)?;
    twobrs_loss(generator, &MassPair::from_quadrature(target, &model, quad)?, k)
}

/// Evaluates [`gaussian_fit_loss`] on every lattice cell and returns the
/// first minimum in index order.
pub fn fit_grid(
    generator: &Generator,
    target: &GaussianMixture,
    grid: &FitGrid,
    k: f64,
    quad: &Quadrature,
) -> Result<FitResult> {
    grid.validate()?;
    check_budgets(&[k])?;
    let mus = grid.mus();
    let sigmas = grid.sigmas();
    let losses = (0..grid.len())
        .into_par_iter()
        .map(|c| {
            gaussian_fit_loss(
                generator,
                target,
                mus[c / grid.sigma_n],
                sigmas[c % grid.sigma_n],
                k,
                quad,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = argmin_first(&losses);
    let index = (best / grid.sigma_n, best % grid.sigma_n);
    Ok(FitResult {
        mu: mus[index.0],
        sigma: sigmas[index.1],
        loss: losses[best],
        k,
        index,
        grid: *grid,
        losses,
    })
}
