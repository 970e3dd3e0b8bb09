//! Probability distributions with exact densities and seeded sampling.
//!
//! Two families are supported:
//!
//! | Type | Points | Density |
//! |------|--------|---------|
//! | [`FiniteDist`] | atom index `usize` | pmf `p_i` |
//! | [`GaussianMixture`] | `Vec<f64>` of length 1 or 2 | `Σ_k w_k N(x; μ_k, diag σ_k²)` |
//!
//! Continuous pairs are reduced to exact finite computations by
//! [`MassPair::from_quadrature`], which places both densities on a common
//! trapezoid grid. Everything downstream (divergences, PR curves, the `c_K`
//! solver) then runs on the resulting pair of mass vectors.
//!
//! The named experiment families ([`ten_mode_family`], [`two_mode_target`],
//! [`grid25`], [`bimodal_pair`]) carry artifact defaults; they are documented on
//! each constructor and recorded in run manifests by the CLI.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, sum_compensated};

const SIMPLEX_TOL: f64 = 1e-12;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Where a distribution lives: a finite set of atoms or `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Atoms(usize),
    Euclidean(usize),
}

/// A distribution with an exact log-density and a seeded sampler.
pub trait Distribution {
    type Point: Clone;

    fn domain(&self) -> Domain;

    /// Natural log of the pmf/pdf at `x`; `-inf` where the density is zero.
    fn ln_density(&self, x: &Self::Point) -> Result<f64>;

    fn density(&self, x: &Self::Point) -> Result<f64> {
        Ok(self.ln_density(x)?.exp())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;

    /// `n` i.i.d. draws.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Self::Point> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn pick<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let total = *cum.last().expect("non-empty weights");
    let u = rng.random::<f64>() * total;
    let idx = cum.partition_point(|&c| c <= u);
    // Guard against u landing on the final edge through rounding, and skip
    // zero-weight atoms at the tail.
    let mut idx = idx.min(cum.len() - 1);
    while idx > 0 && cum[idx] == cum[idx - 1] {
        idx -= 1;
    }
    idx
}

fn check_simplex(weights: &[f64], what: &str) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidDistribution(format!("{what}: empty")));
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidDistribution(format!("{what}: entry {i} is {w}")));
    }
    let total = sum_compensated(weights.iter().copied());
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidDistribution(format!("{what}: sums to {total}, not 1")));
    }
    Ok(())
}

/// A distribution on atoms `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDist {
    probs: Vec<f64>,
    cum: Vec<f64>,
}

impl FiniteDist {
    /// Probabilities must be nonnegative and sum to 1 within `1e-12`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_simplex(&probs, "finite distribution")?;
        let cum = cumulative(&probs);
        Ok(Self { probs, cum })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total = sum_compensated(weights.iter().copied());
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution("zero atoms".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn pmf(&self, atom: usize) -> Result<f64> {
        self.probs.get(atom).copied().ok_or(Error::DimensionMismatch {
            expected: self.probs.len(),
            got: atom,
        })
    }
}

impl Distribution for FiniteDist {
    type Point = usize;

    fn domain(&self) -> Domain {
        Domain::Atoms(self.probs.len())
    }

    fn ln_density(&self, x: &usize) -> Result<f64> {
        Ok(self.pmf(*x)?.ln())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        pick(&self.cum, rng)
    }
}

/// Mixture of axis-aligned Gaussians in one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    dim: usize,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    stds: Vec<Vec<f64>>,
    cum: Vec<f64>,
    ln_weights: Vec<f64>,
}

impl GaussianMixture {
    /// `stds[k]` holds the per-axis standard deviations of component `k`.
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, stds: Vec<Vec<f64>>) -> Result<Self> {
        check_simplex(&weights, "mixture weights")?;
        if means.len() != weights.len() || stds.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} weights, {} means, {} stds",
                weights.len(),
                means.len(),
                stds.len()
            )));
        }
        let dim = means[0].len();
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidDistribution(format!(
                "dimension {dim} unsupported (1 or 2)"
            )));
        }
        for (m, s) in means.iter().zip(&stds) {
            if m.len() != dim || s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: if m.len() != dim { m.len() } else { s.len() },
                });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDistribution("non-finite mean".into()));
            }
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidDistribution(
                    "standard deviations must be positive".into(),
                ));
            }
        }
        let cum = cumulative(&weights);
        let ln_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(Self {
            dim,
            weights,
            means,
            stds,
            cum,
            ln_weights,
        })
    }

    /// Single 1D Gaussian `N(mu, sigma²)`.
    pub fn gaussian_1d(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![vec![mu]], vec![vec![sigma]])
    }

    /// Equal-weight 1D mixture with a shared standard deviation.
    pub fn equal_1d(means: &[f64], sigma: f64) -> Result<Self> {
        let n = means.len();
        if n == 0 {
            return Err(Error::InvalidDistribution("no components".into()));
        }
        Self::new(
            vec![1.0 / n as f64; n],
            means.iter().map(|m| vec![*m]).collect(),
            vec![vec![sigma]; n],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn stds(&self) -> &[Vec<f64>] {
        &self.stds
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    /// Log-density at a point given as a slice.
    pub fn ln_pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let terms: Vec<f64> = (0..self.weights.len())
            .map(|k| {
                let mut t = self.ln_weights[k];
                for ((xd, m), s) in x.iter().zip(&self.means[k]).zip(&self.stds[k]) {
                    let z = (xd - m) / s;
                    t += -0.5 * z * z - s.ln() - LN_SQRT_2PI;
                }
                t
            })
            .collect();
        Ok(log_sum_exp(&terms))
    }

    /// Per-axis interval `[min(μ − wσ), max(μ + wσ)]` over components.
    pub fn span(&self, axis: usize, width: f64) -> (f64, f64) {
        let lo = (0..self.weights.len())
            .map(|k| self.means[k][axis] - width * self.stds[k][axis])
            .fold(f64::INFINITY, f64::min);
        let hi = (0..self.weights.len())
            .map(|k| self.means[k][axis] + width * self.stds[k][axis])
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

impl Distribution for GaussianMixture {
    type Point = Vec<f64>;

    fn domain(&self) -> Domain {
        Domain::Euclidean(self.dim)
    }

    fn ln_density(&self, x: &Vec<f64>) -> Result<f64> {
        self.ln_pdf(x)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k = pick(&self.cum, rng);
        (0..self.dim)
            .map(|d| {
                let z: f64 = rng.sample(StandardNormal);
                self.means[k][d] + self.stds[k][d] * z
            })
            .collect()
    }
}

/// JSON description of a distribution, `{type, weights, means, stds}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistSpec {
    Finite {
        weights: Vec<f64>,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        stds: Vec<Vec<f64>>,
    },
}

impl From<&FiniteDist> for DistSpec {
    fn from(d: &FiniteDist) -> Self {
        DistSpec::Finite {
            weights: d.probs.clone(),
        }
    }
}

impl From<&GaussianMixture> for DistSpec {
    fn from(g: &GaussianMixture) -> Self {
        DistSpec::GaussianMixture {
            weights: g.weights.clone(),
            means: g.means.clone(),
            stds: g.stds.clone(),
        }
    }
}

impl DistSpec {
    pub fn to_finite(&self) -> Result<FiniteDist> {
        match self {
            DistSpec::Finite { weights } => FiniteDist::new(weights.clone()),
            _ => Err(Error::InvalidDistribution("expected a finite distribution".into())),
        }
    }

    pub fn to_mixture(&self) -> Result<GaussianMixture> {
        match self {
            DistSpec::GaussianMixture { weights, means, stds } => {
                GaussianMixture::new(weights.clone(), means.clone(), stds.clone())
            }
            _ => Err(Error::InvalidDistribution("expected a Gaussian mixture".into())),
        }
    }
}

/// A likelihood ratio `r(x) = p(x) / p̂(x)`, evaluated in log space.
pub trait RatioFn<X: ?Sized> {
    fn ln_ratio(&self, x: &X) -> Result<f64>;

    fn ratio(&self, x: &X) -> Result<f64> {
        Ok(self.ln_ratio(x)?.exp())
    }
}

/// Exact ratio of two densities on a common domain.
#[derive(Debug, Clone, Copy)]
pub struct DensityRatio<'a, D> {
    target: &'a D,
    proposal: &'a D,
}

/// Builds `x ↦ p(x)/p̂(x)` after checking the two domains agree.
pub fn ratio<'a, D: Distribution>(target: &'a D, proposal: &'a D) -> Result<DensityRatio<'a, D>> {
    match (target.domain(), proposal.domain()) {
        (Domain::Atoms(a), Domain::Atoms(b)) if a != b => Err(Error::SupportMismatch { left: a, right: b }),
        (Domain::Euclidean(a), Domain::Euclidean(b)) if a != b => Err(Error::DimensionMismatch { expected: a, got: b }),
        (Domain::Atoms(_), Domain::Euclidean(_)) | (Domain::Euclidean(_), Domain::Atoms(_)) => {
            Err(Error::InvalidDistribution("incompatible domains".into()))
        }
        _ => Ok(DensityRatio { target, proposal }),
    }
}

impl<D> DensityRatio<'_, D> {
    pub fn target(&self) -> &D {
        self.target
    }

    pub fn proposal(&self) -> &D {
        self.proposal
    }
}

impl<D: Distribution> RatioFn<D::Point> for DensityRatio<'_, D>
where
    D::Point: std::fmt::Debug,
{
    fn ln_ratio(&self, x: &D::Point) -> Result<f64> {
        let lq = self.proposal.ln_density(x)?;
        if lq == f64::NEG_INFINITY {
            return Err(Error::ZeroDenominator { at: format!("{x:?}") });
        }
        Ok(self.target.ln_density(x)? - lq)
    }
}

/// Wraps a closure returning a nonnegative ratio value.
pub struct FnRatio<F>(pub F);

impl<X: ?Sized, F: Fn(&X) -> f64> RatioFn<X> for FnRatio<F> {
    fn ln_ratio(&self, x: &X) -> Result<f64> {
        let r = (self.0)(x);
        if !(r >= 0.0) || r.is_infinite() {
            return Err(Error::Domain(format!(
                "ratio value {r} is not a finite nonnegative number"
            )));
        }
        Ok(r.ln())
    }
}

/// Composite-trapezoid quadrature over the union of every component's
/// `mean ± sigmas·std` interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub nodes: usize,
    pub sigmas: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            nodes: 4096,
            sigmas: 8.0,
        }
    }
}

impl Quadrature {
    /// Nodes and log trapezoid weights covering the given mixtures (1D).
    pub fn grid(&self, dists: &[&GaussianMixture]) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.nodes < 2 {
            return Err(Error::InvalidParameter("quadrature needs at least 2 nodes".into()));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for d in dists {
            if d.dim() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    got: d.dim(),
                });
            }
            let (a, b) = d.span(0, self.sigmas);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        let h = (hi - lo) / (self.nodes - 1) as f64;
        let xs: Vec<f64> = (0..self.nodes).map(|i| lo + h * i as f64).collect();
        let ln_w: Vec<f64> = (0..self.nodes)
            .map(|i| {
                if i == 0 || i + 1 == self.nodes {
                    (0.5 * h).ln()
                } else {
                    h.ln()
                }
            })
            .collect();
        Ok((xs, ln_w))
    }
}

/// How a [`MassPair`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PairSource {
    Exact,
    Quadrature(Quadrature),
}

/// Two probability vectors `p` (target) and `q` (proposal) on shared atoms,
/// stored as natural logs so tail masses far below `f64::MIN_POSITIVE` keep
/// finite log-ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct MassPair {
    ln_p: Vec<f64>,
    ln_q: Vec<f64>,
    nodes: Option<Vec<f64>>,
    source: PairSource,
}

impl MassPair {
    /// Exact pair of finite distributions on the same atoms.
    pub fn from_finite(p: &FiniteDist, q: &FiniteDist) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::SupportMismatch {
                left: p.len(),
                right: q.len(),
            });
        }
        Ok(Self {
            ln_p: p.probs.iter().map(|v| v.ln()).collect(),
            ln_q: q.probs.iter().map(|v| v.ln()).collect(),
            nodes: None,
            source: PairSource::Exact,
        })
    }

    /// Discretizes two 1D mixtures on a common trapezoid grid. Both mass
    /// vectors are renormalized to sum to one.
    pub fn from_quadrature(p: &GaussianMixture, q: &GaussianMixture, quad: &Quadrature) -> Result<Self> {
        let (xs, ln_w) = quad.grid(&[p, q])?;
        let mut ln_p = Vec::with_capacity(xs.len());
        let mut ln_q = Vec::with_capacity(xs.len());
        for (x, lw) in xs.iter().zip(&ln_w) {
            ln_p.push(p.ln_pdf(&[*x])? + lw);
            ln_q.push(q.ln_pdf(&[*x])? + lw);
        }
        let zp = log_sum_exp(&ln_p);
        let zq = log_sum_exp(&ln_q);
        ln_p.iter_mut().for_each(|v| *v -= zp);
        ln_q.iter_mut().for_each(|v| *v -= zq);
        Ok(Self {
            ln_p,
            ln_q,
            nodes: Some(xs),
            source: PairSource::Quadrature(*quad),
        })
    }

    /// Pair from raw log-masses; both must already be normalized.
    pub fn from_ln_masses(ln_p: Vec<f64>, ln_q: Vec<f64>, nodes: Option<Vec<f64>>, source: PairSource) -> Result<Self> {
        if ln_p.len() != ln_q.len() {
            return Err(Error::SupportMismatch {
                left: ln_p.len(),
                right: ln_q.len(),
            });
        }
        for (what, v) in [("p", &ln_p), ("q", &ln_q)] {
            let z = log_sum_exp(v);
            if z.abs() > 1e-9 {
                return Err(Error::InvalidDistribution(format!("{what} masses sum to {}", z.exp())));
            }
        }
        Ok(Self {
            ln_p,
            ln_q,
            nodes,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.ln_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_p.is_empty()
    }

    pub fn ln_p(&self) -> &[f64] {
        &self.ln_p
    }

    pub fn ln_q(&self) -> &[f64] {
        &self.ln_q
    }

    pub fn p(&self) -> Vec<f64> {
        self.ln_p.iter().map(|v| v.exp()).collect()
    }

    pub fn q(&self) -> Vec<f64> {
        self.ln_q.iter().map(|v| v.exp()).collect()
    }

    /// Quadrature nodes, when the pair came from a continuous pair.
    pub fn nodes(&self) -> Option<&[f64]> {
        self.nodes.as_deref()
    }

    pub fn source(&self) -> PairSource {
        self.source
    }

    /// Same atoms, proposal replaced by `ln_q`.
    pub fn with_proposal(&self, ln_q: Vec<f64>) -> Result<Self> {
        Self::from_ln_masses(self.ln_p.clone(), ln_q, self.nodes.clone(), self.source)
    }

    /// Swaps the roles of target and proposal.
    pub fn swapped(&self) -> Self {
        Self {
            ln_p: self.ln_q.clone(),
            ln_q: self.ln_p.clone(),
            nodes: self.nodes.clone(),
            source: self.source,
        }
    }

    /// `ln(p_j / q_j)`; `+inf` on atoms with `q_j = 0 < p_j`.
    pub fn ln_ratio(&self, j: usize) -> f64 {
        let (lp, lq) = (self.ln_p[j], self.ln_q[j]);
        if lp == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            lp - lq
        }
    }

    /// Checks `q_j = 0 ⇒ p_j = 0`.
    pub fn check_absolute_continuity(&self) -> Result<()> {
        for (j, (lp, lq)) in self.ln_p.iter().zip(&self.ln_q).enumerate() {
            if *lq == f64::NEG_INFINITY && *lp > f64::NEG_INFINITY {
                return Err(Error::AbsoluteContinuity {
                    atom: j,
                    mass: lp.exp(),
                });
            }
        }
        Ok(())
    }
}

/// Target standard deviation and model standard deviation of the ten-mode
/// landscape family (variances 0.3 and 0.4).
pub const TEN_MODE_TARGET_VAR: f64 = 0.3;
pub const TEN_MODE_MODEL_VAR: f64 = 0.4;
/// Spacing of the ten target means. Artifact choice.
pub const TEN_MODE_TARGET_SPACING: f64 = 1.0;

fn ten_centered(spacing: f64) -> Vec<f64> {
    (0..10).map(|i| (i as f64 - 4.5) * spacing).collect()
}

/// Ten-mode target and its `θ`-spaced model. Means of both mixtures are
/// centered at zero; the target uses [`TEN_MODE_TARGET_SPACING`].
pub fn ten_mode_family(theta: f64) -> Result<(GaussianMixture, GaussianMixture)> {
    ten_mode_family_with(theta, TEN_MODE_TARGET_SPACING)
}

pub fn ten_mode_family_with(theta: f64, target_spacing: f64) -> Result<(GaussianMixture, GaussianMixture)> {
    if !(theta > 0.0) || !(target_spacing > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spacings must be positive (theta = {theta}, target = {target_spacing})"
        )));
    }
    let p = GaussianMixture::equal_1d(&ten_centered(target_spacing), TEN_MODE_TARGET_VAR.sqrt())?;
    let q = GaussianMixture::equal_1d(&ten_centered(theta), TEN_MODE_MODEL_VAR.sqrt())?;
    Ok((p, q))
}

/// Mode locations and width of the two-mode fitting target.
pub const TWO_MODE_TARGET_MODE: f64 = 2.5;
pub const TWO_MODE_TARGET_STD: f64 = 0.5;

/// Equal-weight two-mode target at `±TWO_MODE_TARGET_MODE`.
pub fn two_mode_target() -> GaussianMixture {
    GaussianMixture::equal_1d(&[-TWO_MODE_TARGET_MODE, TWO_MODE_TARGET_MODE], TWO_MODE_TARGET_STD)
        .expect("valid constants")
}

/// Single-Gaussian model `N(mu, sigma²)`.
pub fn fit_model(mu: f64, sigma: f64) -> Result<GaussianMixture> {
    GaussianMixture::gaussian_1d(mu, sigma)
}

/// 1D pair used by the acceptance-function comparison: a two-mode target
/// and a single wide Gaussian model.
pub fn bimodal_pair() -> (GaussianMixture, GaussianMixture) {
    let p = GaussianMixture::equal_1d(&[-1.5, 1.5], 0.5).expect("valid constants");
    let q = GaussianMixture::gaussian_1d(0.0, 1.5).expect("valid constants");
    (p, q)
}

/// 5×5 grid of equal-weight isotropic 2D Gaussians with means
/// `{−2s, −s, 0, s, 2s}²`.
pub fn grid25(sigma: f64, spacing: f64) -> Result<GaussianMixture> {
    grid25_weighted(sigma, spacing, &[1.0 / 25.0; 25])
}

/// As [`grid25`], with custom component weights (row-major over the grid).
pub fn grid25_weighted(sigma: f64, spacing: f64, weights: &[f64]) -> Result<GaussianMixture> {
    if !(sigma > 0.0) || !(spacing > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma and spacing must be positive (got {sigma}, {spacing})"
        )));
    }
    if weights.len() != 25 {
        return Err(Error::DimensionMismatch {
            expected: 25,
            got: weights.len(),
        });
    }
    let means = grid25_modes(spacing);
    GaussianMixture::new(weights.to_vec(), means, vec![vec![sigma, sigma]; 25])
}

/// The 25 mode locations, row-major.
pub fn grid25_modes(spacing: f64) -> Vec<Vec<f64>> {
    let axis = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut out = Vec::with_capacity(25);
    for i in axis {
        for j in axis {
            out.push(vec![i * spacing, j * spacing]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_point() -> (FiniteDist, FiniteDist) {
        (
            FiniteDist::new(vec![0.5, 0.5]).unwrap(),
            FiniteDist::new(vec![0.8, 0.2]).unwrap(),
        )
    }

    #[test]
    fn standard_normal_density_at_zero() {
        let g = GaussianMixture::gaussian_1d(0.0, 1.0).unwrap();
        let d = g.density(&vec![0.0]).unwrap();
        assert!((d - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!((d - 0.3989423).abs() < 1e-7);
    }

    #[test]
    fn finite_density_is_pmf() {
        let (p, _) = two_point();
        assert_eq!(p.density(&0).unwrap(), 0.5);
        assert!(p.density(&2).is_err());
    }

    #[test]
    fn two_mode_density_between_modes() {
        let g = GaussianMixture::equal_1d(&[-2.0, 2.0], 0.5).unwrap();
        // 2 · 0.5 · N(0; 2, 0.5)
        let scalar = (-0.5 * 16.0_f64).exp() / (0.5 * (2.0 * std::f64::consts::PI).sqrt());
        let d = g.density(&vec![0.0]).unwrap();
        assert!((d - scalar).abs() < 1e-18);
        assert!((d - 2.68e-4).abs() < 1e-6);
    }

    #[test]
    fn density_dimension_mismatch() {
        let g = grid25(0.05, 1.0).unwrap();
        assert!(matches!(
            g.density(&vec![0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn rejects_bad_distributions() {
        assert!(FiniteDist::new(vec![0.5, 0.4]).is_err());
        assert!(FiniteDist::new(vec![1.5, -0.5]).is_err());
        assert!(GaussianMixture::gaussian_1d(0.0, 0.0).is_err());
        assert!(GaussianMixture::new(vec![0.5, 0.5], vec![vec![0.0]], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn sample_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = GaussianMixture::gaussian_1d(0.0, 1.0).unwrap();
        assert!(g.sample(&mut rng, 0).is_empty());
        let one = FiniteDist::new(vec![1.0]).unwrap();
        assert_eq!(one.sample(&mut rng, 5), vec![0; 5]);
        let zero_tail = FiniteDist::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert!(zero_tail.sample(&mut rng, 1000).iter().all(|&i| i == 1));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let g = grid25(0.05, 1.0).unwrap();
        let a = g.sample(&mut ChaCha8Rng::seed_from_u64(9), 50);
        let b = g.sample(&mut ChaCha8Rng::seed_from_u64(9), 50);
        assert_eq!(a, b);
    }

    #[test]
    fn ratio_examples() {
        let (p, q) = two_point();
        let r = ratio(&p, &q).unwrap();
        assert!((r.ratio(&0).unwrap() - 0.625).abs() < 1e-15);
        assert!((r.ratio(&1).unwrap() - 2.5).abs() < 1e-15);
        let same = ratio(&p, &p).unwrap();
        assert_eq!(same.ratio(&1).unwrap(), 1.0);

        let n1 = GaussianMixture::gaussian_1d(0.0, 1.0).unwrap();
        let n2 = GaussianMixture::gaussian_1d(0.0, 2.0).unwrap();
        let r = ratio(&n1, &n2).unwrap();
        assert!((r.ratio(&vec![0.0]).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn ratio_reports_zero_denominator_and_mismatch() {
        let p = FiniteDist::new(vec![0.5, 0.5]).unwrap();
        let q = FiniteDist::new(vec![1.0, 0.0]).unwrap();
        let r = ratio(&p, &q).unwrap();
        assert!(matches!(r.ratio(&1), Err(Error::ZeroDenominator { .. })));
        let three = FiniteDist::uniform(3).unwrap();
        assert!(ratio(&p, &three).is_err());
    }

    #[test]
    fn ten_mode_family_shapes() {
        let (p, q) = ten_mode_family(TEN_MODE_TARGET_SPACING).unwrap();
        assert_eq!(p.means(), q.means());
        for g in [&p, &q] {
            assert_eq!(g.n_components(), 10);
            assert!(g.weights().iter().all(|w| (*w - 0.1).abs() < 1e-15));
        }
        let (_, q) = ten_mode_family(0.5).unwrap();
        let lo = q.means()[0][0];
        let hi = q.means()[9][0];
        assert!((lo + 2.25).abs() < 1e-12 && (hi - 2.25).abs() < 1e-12);
        assert!((q.stds()[0][0] - 0.4f64.sqrt()).abs() < 1e-15);
        assert!(ten_mode_family(0.0).is_err());
    }

    #[test]
    fn two_mode_target_is_symmetric() {
        let t = two_mode_target();
        for i in 0..=40 {
            let x = i as f64 * 0.2;
            let a = t.density(&vec![x]).unwrap();
            let b = t.density(&vec![-x]).unwrap();
            assert!((a - b).abs() <= 1e-15 * a.max(1e-300));
        }
        let m = fit_model(0.0, 1.0).unwrap();
        assert!((m.density(&vec![0.0]).unwrap() - 0.3989423).abs() < 1e-7);
    }

    #[test]
    fn grid25_layout() {
        let g = grid25(0.05, 1.0).unwrap();
        assert_eq!(g.n_components(), 25);
        assert!(g.weights().iter().all(|w| (*w - 0.04).abs() < 1e-15));
        assert!(g.means().contains(&vec![0.0, 0.0]));
        assert!(g.means().contains(&vec![2.0, 2.0]));
        assert!(g.means().contains(&vec![-2.0, 1.0]));
    }

    #[test]
    fn dist_spec_round_trip() {
        let g = grid25(0.05, 1.0).unwrap();
        let json = serde_json::to_string(&DistSpec::from(&g)).unwrap();
        assert!(json.contains("\"type\":\"gaussian_mixture\""));
        let back: DistSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_mixture().unwrap(), g);
        let f: DistSpec = serde_json::from_str(r#"{"type":"finite","weights":[0.25,0.75]}"#).unwrap();
        assert_eq!(f.to_finite().unwrap().probs(), &[0.25, 0.75]);
        assert!(f.to_mixture().is_err());
    }

    #[test]
    fn quadrature_pair_is_normalized() {
        let (p, q) = bimodal_pair();
        let pair = MassPair::from_quadrature(&p, &q, &Quadrature::default()).unwrap();
        assert_eq!(pair.len(), 4096);
        assert!((sum_compensated(pair.p()) - 1.0).abs() < 1e-12);
        assert!((sum_compensated(pair.q()) - 1.0).abs() < 1e-12);
        let nodes = pair.nodes().unwrap();
        assert!((nodes[0] - (-12.0)).abs() < 1e-12);
        assert!((nodes[4095] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_keeps_finite_log_ratios_in_far_tails() {
        let t = two_mode_target();
        let m = fit_model(-3.0, 0.2).unwrap();
        let pair = MassPair::from_quadrature(&t, &m, &Quadrature::default()).unwrap();
        let max = (0..pair.len())
            .map(|j| pair.ln_ratio(j))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(max.is_finite() && max > 700.0);
    }
}
