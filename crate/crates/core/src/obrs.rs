//! Acceptance functions and budgeted rejection sampling.
//!
//! A proposal `x ~ P̂` is kept with probability `a(x)`. Every acceptance
//! function here is a clipped multiple of the likelihood ratio,
//! `a(x) = min(s·r(x), 1)`, and differs only in how the scale `s` is chosen:
//!
//! | Kind | `s` |
//! |------|-----|
//! | unit | `∞` (keep everything) |
//! | unbudgeted | `1/M` |
//! | OBRS | `c_K/M`, with `c_K` set so that `E_P̂[a] = 1/K` |
//! | DRS | `e^{−γ}/M`, clipped at 1 |
//!
//! Scales are stored in log space. With quadrature over far tails `M` can be
//! as large as `e^{1000}`, so `M`, `c_K` and `s` are carried as logarithms and
//! only exponentiated when a finite value is requested.
//!
//! The acceptance rate `E_P̂[min(s r, 1)]` is evaluated through a
//! [`RateProfile`], which sorts the atoms by ratio once and then answers each
//! rate query with a binary search. The `c_K` solver bisects `log c` on this
//! profile and finishes with an exact linear solve inside the final segment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{Distribution, FiniteDist, MassPair, RatioFn};
use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sum_exp, sum_compensated};

/// Lower end of the initial `c` bracket.
pub const C_MIN: f64 = 1e-10;
/// Upper end of the initial `c` bracket.
pub const C_MAX: f64 = 1e10;
/// Bisection iteration cap.
pub const MAX_ITERATIONS: usize = 200;
/// Rate tolerance used with exact ratios.
pub const EXACT_EPS: f64 = 1e-9;
/// Rate tolerance used with sampled ratios.
pub const SAMPLE_EPS: f64 = 1e-6;

const MAX_BRACKET_EXTENSIONS: usize = 64;

/// An acceptance function `a(x) = min(s·r(x), 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "SpecJson", try_from = "SpecJson")]
pub enum AcceptanceSpec {
    /// `a ≡ 1`.
    Unit,
    /// `a = r/M`.
    Unbudgeted { ln_m: f64 },
    /// `a = min(r·c_K/M, 1)`.
    Obrs { k: f64, ln_c: f64, ln_m: f64 },
    /// `a = min(r·e^{−γ}/M, 1)`.
    Drs { gamma: f64, ln_m: f64 },
}

impl AcceptanceSpec {
    pub fn unbudgeted(m: f64) -> Result<Self> {
        Ok(AcceptanceSpec::Unbudgeted { ln_m: check_m(m)? })
    }

    pub fn obrs(k: f64, c_k: f64, m: f64) -> Result<Self> {
        check_k(k)?;
        if !(c_k > 0.0) {
            return Err(Error::InvalidParameter(format!("c_K must be positive, got {c_k}")));
        }
        Ok(AcceptanceSpec::Obrs {
            k,
            ln_c: c_k.ln(),
            ln_m: check_m(m)?,
        })
    }

    pub fn drs(gamma: f64, m: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be finite, got {gamma}")));
        }
        Ok(AcceptanceSpec::Drs {
            gamma,
            ln_m: check_m(m)?,
        })
    }

    /// `ln s`, the log multiplier on the ratio; `None` for the unit function.
    pub fn ln_scale(&self) -> Option<f64> {
        match *self {
            AcceptanceSpec::Unit => None,
            AcceptanceSpec::Unbudgeted { ln_m } => Some(-ln_m),
            AcceptanceSpec::Obrs { ln_c, ln_m, .. } => Some(ln_c - ln_m),
            AcceptanceSpec::Drs { gamma, ln_m } => Some(-gamma - ln_m),
        }
    }

    pub fn ln_m(&self) -> Option<f64> {
        match *self {
            AcceptanceSpec::Unit => None,
            AcceptanceSpec::Unbudgeted { ln_m }
            | AcceptanceSpec::Obrs { ln_m, .. }
            | AcceptanceSpec::Drs { ln_m, .. } => Some(ln_m),
        }
    }

    pub fn budget(&self) -> Option<f64> {
        match *self {
            AcceptanceSpec::Obrs { k, .. } => Some(k),
            _ => None,
        }
    }

    /// `ln a` given `ln r`.
    pub fn ln_accept(&self, ln_r: f64) -> f64 {
        match self.ln_scale() {
            None => 0.0,
            Some(ls) if ls == f64::INFINITY => {
                if ln_r == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
            Some(ls) => (ln_r + ls).min(0.0),
        }
    }

    /// Acceptance probability for a ratio value.
    pub fn accept_ratio(&self, r: f64) -> f64 {
        self.ln_accept(r.ln()).exp()
    }

    /// Acceptance probability at `x`.
    pub fn accept_prob<X: ?Sized, R: RatioFn<X>>(&self, ratio: &R, x: &X) -> Result<f64> {
        if let AcceptanceSpec::Unit = self {
            return Ok(1.0);
        }
        Ok(self.ln_accept(ratio.ln_ratio(x)?).exp())
    }

    /// The DRS rate `e^{−γ}/M` that holds when `E_P̂[r] = 1` and nothing is
    /// clipped.
    pub fn unclipped_rate(&self) -> Option<f64> {
        match *self {
            AcceptanceSpec::Drs { gamma, ln_m } => Some((-gamma - ln_m).exp()),
            _ => None,
        }
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(k >= 1.0) || k.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "budget K must be finite and >= 1, got {k}"
        )));
    }
    Ok(())
}

fn check_m(m: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("M must be positive, got {m}")));
    }
    Ok(m.ln())
}

/// JSON form `{kind, K, c_K, M, gamma}` plus the exact log values.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpecJson {
    kind: String,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    k: Option<f64>,
    #[serde(rename = "c_K", default, skip_serializing_if = "Option::is_none")]
    c_k: Option<f64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(rename = "ln_c_K", default, skip_serializing_if = "Option::is_none")]
    ln_c: Option<f64>,
    #[serde(rename = "ln_M", default, skip_serializing_if = "Option::is_none")]
    ln_m: Option<f64>,
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<AcceptanceSpec> for SpecJson {
    fn from(s: AcceptanceSpec) -> Self {
        let mut out = SpecJson {
            kind: String::new(),
            k: None,
            c_k: None,
            m: None,
            gamma: None,
            ln_c: None,
            ln_m: None,
        };
        match s {
            AcceptanceSpec::Unit => out.kind = "unit".into(),
            AcceptanceSpec::Unbudgeted { ln_m } => {
                out.kind = "unbudgeted".into();
                out.m = finite_or_none(ln_m.exp());
                out.ln_m = Some(ln_m);
            }
            AcceptanceSpec::Obrs { k, ln_c, ln_m } => {
                out.kind = "obrs".into();
                out.k = Some(k);
                out.c_k = finite_or_none(ln_c.exp());
                out.m = finite_or_none(ln_m.exp());
                out.ln_c = finite_or_none(ln_c);
                out.ln_m = Some(ln_m);
            }
            AcceptanceSpec::Drs { gamma, ln_m } => {
                out.kind = "drs".into();
                out.gamma = Some(gamma);
                out.m = finite_or_none(ln_m.exp());
                out.ln_m = Some(ln_m);
            }
        }
        out
    }
}

impl TryFrom<SpecJson> for AcceptanceSpec {
    type Error = Error;

    fn try_from(j: SpecJson) -> Result<Self> {
        let missing = |what: &str| Error::InvalidParameter(format!("acceptance spec {:?} needs {what}", j.kind));
        let ln_m = match (j.ln_m, j.m) {
            (Some(l), _) => Some(l),
            (None, Some(m)) => Some(check_m(m)?),
            _ => None,
        };
        match j.kind.as_str() {
            "unit" => Ok(AcceptanceSpec::Unit),
            "unbudgeted" => Ok(AcceptanceSpec::Unbudgeted {
                ln_m: ln_m.ok_or_else(|| missing("M"))?,
            }),
            "obrs" => {
                let k = j.k.ok_or_else(|| missing("K"))?;
                check_k(k)?;
                // A missing c_K encodes the unit-budget limit c_K = ∞.
                let ln_c = match (j.ln_c, j.c_k) {
                    (Some(l), _) => l,
                    (None, Some(c)) if c > 0.0 => c.ln(),
                    (None, Some(c)) => return Err(Error::InvalidParameter(format!("c_K must be positive, got {c}"))),
                    (None, None) => f64::INFINITY,
                };
                Ok(AcceptanceSpec::Obrs {
                    k,
                    ln_c,
                    ln_m: ln_m.ok_or_else(|| missing("M"))?,
                })
            }
            "drs" => Ok(AcceptanceSpec::Drs {
                gamma: j.gamma.ok_or_else(|| missing("gamma"))?,
                ln_m: ln_m.ok_or_else(|| missing("M"))?,
            }),
            other => Err(Error::InvalidParameter(format!(
                "unknown acceptance kind {other:?} (expected unit, unbudgeted, obrs or drs)"
            ))),
        }
    }
}

/// Weighted atoms sorted by decreasing log-ratio, with prefix sums for
/// `rate(s) = Σ_j w_j min(s r_j, 1)`.
#[derive(Debug, Clone)]
pub struct RateProfile {
    ln_r: Vec<f64>,
    /// `head_w[i] = Σ_{j<i} w_j`.
    head_w: Vec<f64>,
    /// `ln_tail[i] = ln Σ_{j≥i} w_j r_j`.
    ln_tail: Vec<f64>,
    ratio_evals: usize,
}

impl RateProfile {
    /// From per-atom log-ratios and log-weights. Atoms with zero weight are
    /// dropped.
    pub fn new(ln_r: &[f64], ln_w: &[f64]) -> Result<Self> {
        if ln_r.len() != ln_w.len() {
            return Err(Error::SupportMismatch {
                left: ln_r.len(),
                right: ln_w.len(),
            });
        }
        let mut atoms: Vec<(f64, f64)> = ln_r
            .iter()
            .zip(ln_w)
            .filter(|(_, lw)| **lw > f64::NEG_INFINITY)
            .map(|(lr, lw)| (*lr, *lw))
            .collect();
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution(
                "no atoms with positive proposal mass".into(),
            ));
        }
        if atoms
            .iter()
            .any(|(lr, lw)| lr.is_nan() || *lr == f64::INFINITY || lw.is_nan())
        {
            return Err(Error::Domain("log-ratio must be finite or -inf".into()));
        }
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
        let n = atoms.len();
        let mut head_w = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        let mut comp = 0.0;
        head_w.push(0.0);
        for (_, lw) in &atoms {
            // Neumaier step, kept inline to retain every prefix.
            let w = lw.exp();
            let t = acc + w;
            if acc.abs() >= w.abs() {
                comp += (acc - t) + w;
            } else {
                comp += (w - t) + acc;
            }
            acc = t;
            head_w.push(acc + comp);
        }
        let mut ln_tail = vec![f64::NEG_INFINITY; n + 1];
        for i in (0..n).rev() {
            let (lr, lw) = atoms[i];
            ln_tail[i] = log_add_exp(ln_tail[i + 1], lr + lw);
        }
        Ok(Self {
            ln_r: atoms.iter().map(|a| a.0).collect(),
            head_w,
            ln_tail,
            ratio_evals: n,
        })
    }

    /// Exact profile of a mass pair: weights `q`, ratios `p/q`.
    pub fn from_pair(pair: &MassPair) -> Result<Self> {
        pair.check_absolute_continuity()?;
        let ln_r: Vec<f64> = (0..pair.len()).map(|j| pair.ln_ratio(j)).collect();
        Self::new(&ln_r, pair.ln_q())
    }

    /// Empirical profile from `n` proposal draws, each with weight `1/n`.
    /// The sample set is fixed, so the empirical rate is exactly monotone in
    /// the scale.
    pub fn from_samples<D, R>(ratio: &R, proposal: &D, n: usize, seed: u64) -> Result<Self>
    where
        D: Distribution,
        R: RatioFn<D::Point>,
    {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ln_r = (0..n)
            .map(|_| ratio.ln_ratio(&proposal.draw(&mut rng)))
            .collect::<Result<Vec<f64>>>()?;
        Self::from_ln_ratios(&ln_r)
    }

    /// Equal-weight profile of given log-ratios.
    pub fn from_ln_ratios(ln_r: &[f64]) -> Result<Self> {
        let lw = -(ln_r.len() as f64).ln();
        Self::new(ln_r, &vec![lw; ln_r.len()])
    }

    pub fn len(&self) -> usize {
        self.ln_r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_r.is_empty()
    }

    /// Number of ratio evaluations that went into the profile.
    pub fn ratio_evals(&self) -> usize {
        self.ratio_evals
    }

    pub fn ln_r_max(&self) -> f64 {
        self.ln_r[0]
    }

    pub fn ln_r_min(&self) -> f64 {
        *self.ln_r.last().expect("non-empty profile")
    }

    /// `Σ w_j`, the largest attainable rate.
    pub fn total_weight(&self) -> f64 {
        *self.head_w.last().expect("non-empty profile")
    }

    fn split(&self, ln_s: f64) -> usize {
        if ln_s == f64::INFINITY {
            return self.ln_r.iter().filter(|lr| **lr > f64::NEG_INFINITY).count();
        }
        self.ln_r.partition_point(|&lr| lr + ln_s >= 0.0)
    }

    fn rate_at_split(&self, idx: usize, ln_s: f64) -> f64 {
        let lt = self.ln_tail[idx];
        let tail = if lt == f64::NEG_INFINITY {
            0.0
        } else {
            (ln_s + lt).exp()
        };
        self.head_w[idx] + tail
    }

    /// `Σ_j w_j min(e^{ln_s} r_j, 1)`.
    pub fn rate(&self, ln_s: f64) -> f64 {
        self.rate_at_split(self.split(ln_s), ln_s)
    }

    /// Smallest `ln s` at which every atom with positive ratio is accepted
    /// with probability one; `+∞` if some atom has zero ratio.
    pub fn ln_s_full(&self) -> f64 {
        -self.ln_r_min()
    }
}

/// Result of a monotone scale search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSolution {
    pub ln_s: f64,
    pub rate: f64,
    pub iterations: usize,
    pub bracket_extensions: usize,
    /// Final bracket on `ln s`.
    pub ln_bracket: (f64, f64),
}

/// Finds `ln s` with `|rate(s) − target| ≤ eps` by bisection in log space
/// starting from `[ln_lo, ln_hi]`, widening the bracket when it does not
/// straddle the target.
pub fn solve_scale(profile: &RateProfile, target: f64, eps: f64, ln_lo: f64, ln_hi: f64) -> Result<ScaleSolution> {
    if !(target > 0.0 && target <= profile.total_weight() + eps) {
        return Err(Error::InvalidParameter(format!(
            "target rate {target} outside (0, {}]",
            profile.total_weight()
        )));
    }
    let (mut lo, mut hi) = (ln_lo, ln_hi);
    let mut extensions = 0;
    while profile.rate(hi) < target - eps {
        if extensions == MAX_BRACKET_EXTENSIONS || hi >= profile.ln_s_full() {
            break;
        }
        let w = hi - lo;
        lo = hi;
        hi += 2.0 * w;
        extensions += 1;
    }
    while profile.rate(lo) > target + eps && extensions < MAX_BRACKET_EXTENSIONS {
        let w = hi - lo;
        hi = lo;
        lo -= 2.0 * w;
        extensions += 1;
    }
    let mut iterations = 0;
    let mut mid = 0.5 * (lo + hi);
    let mut rate = profile.rate(mid);
    while (rate - target).abs() > eps {
        if iterations == MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                lo,
                hi,
                residual: rate - target,
            });
        }
        if rate < target {
            lo = mid;
        } else {
            hi = mid;
        }
        mid = 0.5 * (lo + hi);
        rate = profile.rate(mid);
        iterations += 1;
    }
    // The rate is linear in s between two ratio breakpoints; solve it there.
    let idx = profile.split(mid);
    let rest = target - profile.head_w[idx];
    let lt = profile.ln_tail[idx];
    if rest > 0.0 && lt > f64::NEG_INFINITY {
        let ln_s = rest.ln() - lt;
        if profile.split(ln_s) == idx {
            let r = profile.rate_at_split(idx, ln_s);
            if (r - target).abs() <= (rate - target).abs() {
                mid = ln_s;
                rate = r;
            }
        }
    }
    Ok(ScaleSolution {
        ln_s: mid,
        rate,
        iterations,
        bracket_extensions: extensions,
        ln_bracket: (lo, hi),
    })
}

/// Which side of the budget the solution falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRegime {
    /// `K = 1`: the only feasible acceptance is `a ≡ 1`.
    Unit,
    /// `1 < K < M`: rate exactly `1/K`.
    Budgeted,
    /// `K ≥ M`: `c_K = 1`, the unbudgeted function, rate `≥ 1/K`.
    Unbudgeted,
}

/// A solved OBRS calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CkSolution {
    pub k: f64,
    /// `c_K`; `+∞` when `K = 1` and some atom has zero ratio.
    pub c_k: f64,
    pub ln_c_k: f64,
    pub m: f64,
    pub ln_m: f64,
    /// Achieved acceptance rate.
    pub rate: f64,
    pub iterations: usize,
    pub bracket_extensions: usize,
    pub regime: BudgetRegime,
}

impl CkSolution {
    pub fn spec(&self) -> AcceptanceSpec {
        AcceptanceSpec::Obrs {
            k: self.k,
            ln_c: self.ln_c_k,
            ln_m: self.ln_m,
        }
    }

    /// `ln(c_K/M)`.
    pub fn ln_scale(&self) -> f64 {
        self.ln_c_k - self.ln_m
    }
}

/// Solves for `c_K` on a rate profile with a given `ln M`.
///
/// For `K = 1` the returned `c_K = M/min r` is the smallest value accepting
/// everything. For `K ≥ M` the unbudgeted function already meets the budget
/// and `c_K = 1`.
pub fn solve_c_k(profile: &RateProfile, k: f64, ln_m: f64, eps: f64) -> Result<CkSolution> {
    check_k(k)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let build = |ln_c: f64, rate: f64, iterations, bracket_extensions, regime| CkSolution {
        k,
        c_k: ln_c.exp(),
        ln_c_k: ln_c,
        m: ln_m.exp(),
        ln_m,
        rate,
        iterations,
        bracket_extensions,
        regime,
    };
    if k == 1.0 {
        let ln_s = profile.ln_s_full();
        return Ok(build(ln_s + ln_m, profile.rate(ln_s), 0, 0, BudgetRegime::Unit));
    }
    if k.ln() >= ln_m {
        return Ok(build(0.0, profile.rate(-ln_m), 0, 0, BudgetRegime::Unbudgeted));
    }
    let sol = solve_scale(profile, 1.0 / k, eps, C_MIN.ln() - ln_m, C_MAX.ln() - ln_m)?;
    Ok(build(
        sol.ln_s + ln_m,
        sol.rate,
        sol.iterations,
        sol.bracket_extensions,
        BudgetRegime::Budgeted,
    ))
}

/// Exact `c_K` for a mass pair, with `M` the exact maximum ratio.
pub fn solve_c_k_pair(pair: &MassPair, k: f64) -> Result<CkSolution> {
    let profile = RateProfile::from_pair(pair)?;
    solve_c_k(&profile, k, profile.ln_r_max(), EXACT_EPS)
}

/// How `M` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MMode {
    Exact,
    Samples { n: usize, seed: u64 },
    Grid { size: usize },
}

/// An estimate of `M = sup r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MEstimate {
    pub ln_m: f64,
    #[serde(flatten)]
    pub mode: MMode,
}

impl MEstimate {
    pub fn m(&self) -> f64 {
        self.ln_m.exp()
    }
}

/// Exact `M` as the largest atom ratio of a pair.
pub fn estimate_m_pair(pair: &MassPair) -> Result<MEstimate> {
    pair.check_absolute_continuity()?;
    let ln_m = (0..pair.len())
        .map(|j| pair.ln_ratio(j))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MEstimate {
        ln_m,
        mode: MMode::Exact,
    })
}

/// Largest ratio over `n` seeded proposal draws.
pub fn estimate_m_samples<D, R>(ratio: &R, proposal: &D, n: usize, seed: u64) -> Result<MEstimate>
where
    D: Distribution,
    R: RatioFn<D::Point>,
{
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ln_m = f64::NEG_INFINITY;
    for _ in 0..n {
        ln_m = ln_m.max(ratio.ln_ratio(&proposal.draw(&mut rng))?);
    }
    Ok(MEstimate {
        ln_m,
        mode: MMode::Samples { n, seed },
    })
}

/// Largest ratio over a fixed grid of points.
pub fn estimate_m_grid<X, R: RatioFn<X>>(ratio: &R, grid: &[X]) -> Result<MEstimate> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let mut ln_m = f64::NEG_INFINITY;
    for x in grid {
        ln_m = ln_m.max(ratio.ln_ratio(x)?);
    }
    Ok(MEstimate {
        ln_m,
        mode: MMode::Grid { size: grid.len() },
    })
}

/// A solved DRS calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrsSolution {
    pub gamma: f64,
    pub ln_m: f64,
    pub rate: f64,
    pub iterations: usize,
}

impl DrsSolution {
    pub fn spec(&self) -> AcceptanceSpec {
        AcceptanceSpec::Drs {
            gamma: self.gamma,
            ln_m: self.ln_m,
        }
    }
}

/// Tunes `γ` so the clipped DRS acceptance `min(r e^{−γ}/M, 1)` reaches
/// `target_rate` within `eps`.
pub fn drs_gamma_for_rate(profile: &RateProfile, ln_m: f64, target_rate: f64, eps: f64) -> Result<DrsSolution> {
    if !(target_rate > 0.0 && target_rate <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target rate must lie in (0, 1], got {target_rate}"
        )));
    }
    if target_rate == 1.0 && profile.ln_s_full().is_finite() {
        let ln_s = profile.ln_s_full();
        return Ok(DrsSolution {
            gamma: -ln_s - ln_m,
            ln_m,
            rate: profile.rate(ln_s),
            iterations: 0,
        });
    }
    // γ = −ln c, so the γ bracket [−ln C_MAX, −ln C_MIN] mirrors the c bracket.
    let sol = solve_scale(profile, target_rate, eps, C_MIN.ln() - ln_m, C_MAX.ln() - ln_m)?;
    Ok(DrsSolution {
        gamma: -sol.ln_s - ln_m,
        ln_m,
        rate: sol.rate,
        iterations: sol.iterations,
    })
}

/// Output of [`rejection_sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun<X> {
    pub samples: Vec<X>,
    pub draws_used: usize,
    /// Ratio evaluations performed (zero for the unit function).
    pub ratio_evals: usize,
}

impl<X> SampleRun<X> {
    pub fn measured_rate(&self) -> f64 {
        self.samples.len() as f64 / self.draws_used as f64
    }
}

/// Draws from `proposal` and keeps each draw with probability `a(x)` until
/// `n_target` draws are kept, or fails once `max_draws` proposals are used.
///
/// Each proposal consumes one point draw followed by one uniform, so two
/// acceptance functions run with the same seed see the same proposals and the
/// same uniforms.
pub fn rejection_sample<D, R, G>(
    proposal: &D,
    ratio: &R,
    spec: &AcceptanceSpec,
    n_target: usize,
    rng: &mut G,
    max_draws: usize,
) -> Result<SampleRun<D::Point>>
where
    D: Distribution,
    R: RatioFn<D::Point>,
    G: Rng + ?Sized,
{
    if n_target == 0 {
        return Err(Error::InvalidParameter("n_target must be at least 1".into()));
    }
    let mut samples = Vec::with_capacity(n_target);
    let mut draws = 0;
    let mut evals = 0;
    while samples.len() < n_target {
        if draws == max_draws {
            return Err(Error::BudgetExhausted {
                accepted: samples.len(),
                target: n_target,
                draws,
            });
        }
        let x = proposal.draw(rng);
        let u: f64 = rng.random();
        draws += 1;
        let a = match spec {
            AcceptanceSpec::Unit => 1.0,
            _ => {
                evals += 1;
                spec.accept_prob(ratio, &x)?
            }
        };
        if u < a {
            samples.push(x);
        }
    }
    Ok(SampleRun {
        samples,
        draws_used: draws,
        ratio_evals: evals,
    })
}

/// A tabulated acceptance function on finite atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceTable {
    pub values: Vec<f64>,
    /// `Σ p̂_i a_i`.
    pub rate: f64,
}

/// The refined distribution `p̃ = p̂·a/Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedDist {
    ln_probs: Vec<f64>,
    acceptance: Vec<f64>,
    z: f64,
}

impl RefinedDist {
    /// From proposal log-masses and per-atom log-acceptances.
    pub fn from_ln_acceptance(ln_q: &[f64], ln_a: &[f64]) -> Result<Self> {
        if ln_q.len() != ln_a.len() {
            return Err(Error::SupportMismatch {
                left: ln_q.len(),
                right: ln_a.len(),
            });
        }
        let joint: Vec<f64> = ln_q.iter().zip(ln_a).map(|(q, a)| q + a).collect();
        let ln_z = log_sum_exp(&joint);
        if ln_z == f64::NEG_INFINITY {
            return Err(Error::ZeroNormalizer);
        }
        Ok(Self {
            ln_probs: joint.iter().map(|j| j - ln_z).collect(),
            acceptance: ln_a.iter().map(|a| a.exp()).collect(),
            z: ln_z.exp(),
        })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.ln_probs.iter().map(|v| v.exp()).collect()
    }

    pub fn ln_probs(&self) -> &[f64] {
        &self.ln_probs
    }

    /// Per-atom acceptance probabilities.
    pub fn acceptance(&self) -> &[f64] {
        &self.acceptance
    }

    /// Normalizing constant, equal to the acceptance rate.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_finite(&self) -> Result<FiniteDist> {
        FiniteDist::from_weights(&self.probs())
    }

    /// `(target, refined)` as a mass pair on the original atoms.
    pub fn target_pair(&self, pair: &MassPair) -> Result<MassPair> {
        pair.with_proposal(self.ln_probs.clone())
    }
}

/// Refines the proposal of `pair` with `spec`, using the exact atom ratios.
pub fn refine_pair(pair: &MassPair, spec: &AcceptanceSpec) -> Result<RefinedDist> {
    pair.check_absolute_continuity()?;
    let ln_a: Vec<f64> = (0..pair.len()).map(|j| spec.ln_accept(pair.ln_ratio(j))).collect();
    RefinedDist::from_ln_acceptance(pair.ln_q(), &ln_a)
}

/// Refines a finite proposal with `spec`, evaluating the ratio per atom.
/// Atoms without proposal mass keep zero refined mass.
pub fn refined_finite<R: RatioFn<usize>>(p_hat: &FiniteDist, ratio: &R, spec: &AcceptanceSpec) -> Result<RefinedDist> {
    let mut ln_a = Vec::with_capacity(p_hat.len());
    for (i, q) in p_hat.probs().iter().enumerate() {
        ln_a.push(if *q == 0.0 {
            f64::NEG_INFINITY
        } else {
            spec.ln_accept(ratio.ln_ratio(&i)?)
        });
    }
    let ln_q: Vec<f64> = p_hat.probs().iter().map(|q| q.ln()).collect();
    RefinedDist::from_ln_acceptance(&ln_q, &ln_a)
}

/// Refines a finite proposal with a tabulated acceptance function.
pub fn refine_with_table(p_hat: &FiniteDist, table: &AcceptanceTable) -> Result<RefinedDist> {
    if table.values.len() != p_hat.len() {
        return Err(Error::SupportMismatch {
            left: p_hat.len(),
            right: table.values.len(),
        });
    }
    if let Some((i, a)) = table
        .values
        .iter()
        .enumerate()
        .find(|(_, a)| !(**a >= 0.0 && **a <= 1.0))
    {
        return Err(Error::Domain(format!(
            "acceptance value {a} at atom {i} is outside [0, 1]"
        )));
    }
    let ln_q: Vec<f64> = p_hat.probs().iter().map(|q| q.ln()).collect();
    let ln_a: Vec<f64> = table.values.iter().map(|a| a.ln()).collect();
    RefinedDist::from_ln_acceptance(&ln_q, &ln_a)
}

/// Tolerance on `p̃/p̂ ≤ K` for ball membership.
pub const BALL_TOL: f64 = 1e-12;

/// Recovers the acceptance function `a_i = p̃_i/(K p̂_i)` that refines `P̂`
/// into `P̃` at rate `1/K`, or names the atom whose ratio exceeds `K`.
pub fn acceptance_from_target(tilde: &FiniteDist, p_hat: &FiniteDist, k: f64) -> Result<AcceptanceTable> {
    check_k(k)?;
    if tilde.len() != p_hat.len() {
        return Err(Error::SupportMismatch {
            left: tilde.len(),
            right: p_hat.len(),
        });
    }
    let mut values = Vec::with_capacity(tilde.len());
    for (i, (t, q)) in tilde.probs().iter().zip(p_hat.probs()).enumerate() {
        if *q == 0.0 {
            if *t > 0.0 {
                return Err(Error::OutOfBall {
                    atom: i,
                    ratio: f64::INFINITY,
                    k,
                });
            }
            values.push(0.0);
            continue;
        }
        let ratio = t / q;
        if ratio > k * (1.0 + BALL_TOL) {
            return Err(Error::OutOfBall { atom: i, ratio, k });
        }
        values.push((ratio / k).min(1.0));
    }
    let rate = sum_compensated(p_hat.probs().iter().zip(&values).map(|(q, a)| q * a));
    Ok(AcceptanceTable { values, rate })
}
