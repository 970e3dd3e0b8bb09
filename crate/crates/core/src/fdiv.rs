//! # f-divergences
//!
//! `D_f(P‖P̂) = E_{P̂}[f(p/p̂)]` for a convex generator `f` on `[0, ∞)`.
//!
//! | Generator | `f(u)` | `f*(t)` | `T_opt` | `f(1)` |
//! |-----------|--------|---------|---------|--------|
//! | KL | `u log u` | `exp(t − 1)` | `1 + log r` | 0 |
//! | Reverse KL | `−log u` | `−1 − log(−t)`, `t < 0` | `−1/r` | 0 |
//! | TV | `½|u − 1|` | primal only | `½ sign(r − 1)` | 0 |
//! | GAN | `u log u − (u+1) log(u+1)` | `−log(1 − eᵗ)`, `t < 0` | `log(r/(1+r))` | `−log 4` |
//! | PR(λ) | `max(λu, 1) − max(λ, 1)` | `t/λ` | `λ sign(r − 1)` | 0 |
//!
//! The GAN generator is kept unshifted, so `D_GAN(P‖P) = −log 4`; use
//! [`Generator::shifted`] for a view that vanishes at `P = P̂`. The GAN
//! discriminator is parameterized in log space, `T = log D` with
//! `D = p/(p + p̂)`, so that `∇f*(T) = r` holds on all of `t < 0`.
//!
//! All logarithms are natural.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dist::{Distribution, FiniteDist, MassPair, RatioFn};
use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, log_sum_exp, sum_compensated, RunningStats};

/// An f-divergence generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    Kl,
    ReverseKl,
    TotalVariation,
    Gan,
    Pr { lambda: f64 },
}

impl Generator {
    /// The generators used by sweeps that check every supported divergence.
    pub fn all_primal() -> [Generator; 5] {
        [
            Generator::Kl,
            Generator::ReverseKl,
            Generator::TotalVariation,
            Generator::Gan,
            Generator::Pr { lambda: 2.0 },
        ]
    }

    pub fn pr(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "PR generator needs lambda > 0, got {lambda}"
            )));
        }
        Ok(Generator::Pr { lambda })
    }

    /// Differentiable with a strictly increasing `∇f*`.
    pub fn is_smooth(&self) -> bool {
        matches!(self, Generator::Kl | Generator::ReverseKl | Generator::Gan)
    }

    /// `f(1)`: zero except for GAN (`−log 4`).
    pub fn offset(&self) -> f64 {
        match self {
            Generator::Gan => -(4f64.ln()),
            _ => 0.0,
        }
    }

    /// Divergence value shifted by `−f(1)`, which is zero at `P = P̂`.
    pub fn shifted(&self, divergence: f64) -> f64 {
        divergence - self.offset()
    }

    /// `f(u)` with right limits at `u = 0`.
    pub fn f_value(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("f is defined on u >= 0, got {u}")));
        }
        Ok(match *self {
            Generator::Kl => {
                if u == 0.0 {
                    0.0
                } else {
                    u * u.ln()
                }
            }
            Generator::ReverseKl => -u.ln(),
            Generator::TotalVariation => 0.5 * (u - 1.0).abs(),
            Generator::Gan => {
                if u == 0.0 {
                    0.0
                } else if u.is_infinite() {
                    f64::NEG_INFINITY
                } else {
                    // u log(u/(u+1)) − log(u+1), stable for large u
                    -u * (1.0 / u).ln_1p() - u.ln_1p()
                }
            }
            Generator::Pr { lambda } => (lambda * u).max(1.0) - lambda.max(1.0),
        })
    }

    /// `f'(u)` for the smooth generators.
    pub fn f_derivative(&self, u: f64) -> Result<f64> {
        if !(u > 0.0) {
            return Err(Error::Domain(format!("f' needs u > 0, got {u}")));
        }
        match self {
            Generator::Kl => Ok(u.ln() + 1.0),
            Generator::ReverseKl => Ok(-1.0 / u),
            Generator::Gan => Ok(-(1.0 / u).ln_1p()),
            _ => Err(self.unsupported("f_derivative")),
        }
    }

    /// Convex conjugate `f*(t)`.
    pub fn fstar_value(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::Domain("f* at NaN".into()));
        }
        match *self {
            Generator::Kl => Ok((t - 1.0).exp()),
            Generator::ReverseKl => {
                if t < 0.0 {
                    Ok(-1.0 - (-t).ln())
                } else {
                    Err(Error::Domain(format!("reverse KL conjugate needs t < 0, got {t}")))
                }
            }
            Generator::Gan => {
                if t < 0.0 {
                    Ok(-(-t.exp_m1()).ln())
                } else {
                    Err(Error::Domain(format!("GAN conjugate needs t < 0, got {t}")))
                }
            }
            Generator::Pr { lambda } => Ok(t / lambda),
            Generator::TotalVariation => Err(self.unsupported("fstar_value")),
        }
    }

    /// `∇f*(t)`: the likelihood ratio implied by a discriminator output.
    pub fn ratio_from_discriminator(&self, t: f64) -> Result<f64> {
        match self {
            Generator::Kl => Ok((t - 1.0).exp()),
            Generator::ReverseKl => {
                if t < 0.0 {
                    Ok(-1.0 / t)
                } else {
                    Err(Error::Domain(format!("reverse KL needs t < 0, got {t}")))
                }
            }
            Generator::Gan => {
                if t < 0.0 {
                    Ok(t.exp() / -t.exp_m1())
                } else {
                    Err(Error::Domain(format!("GAN needs t < 0, got {t}")))
                }
            }
            // f* is linear (PR) or not used (TV): ∇f* carries no ratio.
            Generator::TotalVariation | Generator::Pr { .. } => Err(self.unsupported("ratio_from_discriminator")),
        }
    }

    /// Closed-form optimal discriminator for a ratio `r > 0`.
    pub fn t_opt_from_ratio(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) || r.is_infinite() {
            return Err(Error::Domain(format!("ratio must be positive and finite, got {r}")));
        }
        let sign = |v: f64| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        };
        Ok(match *self {
            Generator::Kl => 1.0 + r.ln(),
            Generator::ReverseKl => -1.0 / r,
            Generator::Gan => -(1.0 / r).ln_1p(),
            Generator::TotalVariation => 0.5 * sign(r - 1.0),
            Generator::Pr { lambda } => lambda * sign(r - 1.0),
        })
    }

    /// Perspective `q·f(p/q)` from log-masses, with `0·f(0/0) = 0`.
    ///
    /// Each branch is written so that masses far below the `f64` range still
    /// contribute their limit instead of `NaN`.
    pub fn perspective_ln(&self, ln_p: f64, ln_q: f64) -> f64 {
        let ninf = f64::NEG_INFINITY;
        if ln_p == ninf && ln_q == ninf {
            return 0.0;
        }
        let (p, q) = (ln_p.exp(), ln_q.exp());
        match *self {
            Generator::Kl => {
                if ln_p == ninf || p == 0.0 {
                    0.0
                } else if ln_q == ninf {
                    f64::INFINITY
                } else {
                    p * (ln_p - ln_q)
                }
            }
            Generator::ReverseKl => {
                if ln_q == ninf || q == 0.0 {
                    0.0
                } else if ln_p == ninf {
                    f64::INFINITY
                } else {
                    q * (ln_q - ln_p)
                }
            }
            Generator::TotalVariation => 0.5 * (p - q).abs(),
            Generator::Gan => {
                let l = log_add_exp(ln_p, ln_q);
                let a = if p == 0.0 { 0.0 } else { p * (ln_p - l) };
                let b = if q == 0.0 { 0.0 } else { q * (ln_q - l) };
                a + b
            }
            Generator::Pr { lambda } => (lambda * p).max(q) - lambda.max(1.0) * q,
        }
    }

    fn unsupported(&self, op: &'static str) -> Error {
        Error::Unsupported {
            op,
            generator: self.to_string(),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Kl => write!(f, "kl"),
            Generator::ReverseKl => write!(f, "rkl"),
            Generator::TotalVariation => write!(f, "tv"),
            Generator::Gan => write!(f, "gan"),
            Generator::Pr { lambda } => write!(f, "pr:{lambda}"),
        }
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kl" => Ok(Generator::Kl),
            "rkl" | "reverse_kl" => Ok(Generator::ReverseKl),
            "tv" => Ok(Generator::TotalVariation),
            "gan" => Ok(Generator::Gan),
            other => match other.strip_prefix("pr:") {
                Some(l) => {
                    let lambda = l
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidParameter(format!("bad PR lambda {l:?}: {e}")))?;
                    Generator::pr(lambda)
                }
                None => Err(Error::InvalidParameter(format!(
                    "unknown generator {s:?} (expected kl, rkl, tv, gan or pr:LAMBDA)"
                ))),
            },
        }
    }
}

impl Serialize for Generator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Generator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A divergence value with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEstimate {
    pub value: f64,
    /// Zero for exact evaluation.
    pub stderr: f64,
    /// Sample count; zero for exact evaluation.
    pub n: usize,
}

impl DivergenceEstimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            stderr: 0.0,
            n: 0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.n == 0
    }
}

fn check_same_support(p: &FiniteDist, q: &FiniteDist) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::SupportMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// Exact `Σ_i q_i f(p_i/q_i)` on a finite support.
pub fn divergence_finite(generator: &Generator, p: &FiniteDist, q: &FiniteDist) -> Result<DivergenceEstimate> {
    check_same_support(p, q)?;
    let mut terms = Vec::with_capacity(p.len());
    for (i, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if qi == 0.0 {
            if pi > 0.0 {
                return Err(Error::AbsoluteContinuity { atom: i, mass: pi });
            }
            continue;
        }
        terms.push(qi * generator.f_value(pi / qi)?);
    }
    Ok(DivergenceEstimate::exact(sum_compensated(terms)))
}

/// `D_f(P‖Q)` for a mass pair (exact or discretized), via the perspective.
pub fn divergence_pair(generator: &Generator, pair: &MassPair) -> Result<f64> {
    pair.check_absolute_continuity()?;
    Ok(sum_compensated(
        pair.ln_p()
            .iter()
            .zip(pair.ln_q())
            .map(|(lp, lq)| generator.perspective_ln(*lp, *lq)),
    ))
}

/// Monte Carlo `E_{P̂}[f(r(x))]` from `n ≥ 2` proposal draws seeded by `seed`.
pub fn divergence_mc<D, R>(
    generator: &Generator,
    ratio: &R,
    proposal: &D,
    n: usize,
    seed: u64,
) -> Result<DivergenceEstimate>
where
    D: Distribution,
    R: RatioFn<D::Point>,
{
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 samples, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = RunningStats::default();
    for _ in 0..n {
        let x = proposal.draw(&mut rng);
        let r = ratio.ratio(&x)?;
        let v = generator.f_value(r)?;
        if !v.is_finite() {
            return Err(Error::Estimation { ratio: r, value: v });
        }
        stats.push(v);
    }
    Ok(DivergenceEstimate {
        value: stats.mean(),
        stderr: stats.stderr(),
        n,
    })
}

/// Variational lower bound `E_P[T] − E_{P̂}[f*(T)]` for per-atom
/// discriminator values `t`.
pub fn dual_value(generator: &Generator, t: &[f64], pair: &MassPair) -> Result<f64> {
    if !generator.is_smooth() {
        return Err(Error::Unsupported {
            op: "dual_value",
            generator: generator.to_string(),
        });
    }
    if t.len() != pair.len() {
        return Err(Error::SupportMismatch {
            left: t.len(),
            right: pair.len(),
        });
    }
    let mut terms = Vec::with_capacity(2 * t.len());
    for (j, &tj) in t.iter().enumerate() {
        let (p, q) = (pair.ln_p()[j].exp(), pair.ln_q()[j].exp());
        let fs = generator.fstar_value(tj)?;
        if p > 0.0 {
            terms.push(p * tj);
        }
        if q > 0.0 {
            terms.push(-q * fs);
        }
    }
    Ok(sum_compensated(terms))
}

/// [`dual_value`] on finite distributions with `t` given per atom.
pub fn dual_value_finite<F: Fn(usize) -> f64>(
    generator: &Generator,
    t: F,
    p: &FiniteDist,
    q: &FiniteDist,
) -> Result<f64> {
    let pair = MassPair::from_finite(p, q)?;
    let values: Vec<f64> = (0..p.len()).map(t).collect();
    dual_value(generator, &values, &pair)
}

/// `ln Σ p^β q^(1−β)` over atoms, for any `β ≥ 0`. Atoms where either side
/// vanishes are dropped, which is the correct limit for `β ∈ (0, 1)`.
pub(crate) fn renyi_ln_sum(beta: f64, pair: &MassPair) -> f64 {
    let terms: Vec<f64> = pair
        .ln_p()
        .iter()
        .zip(pair.ln_q())
        .filter(|(lp, lq)| **lp > f64::NEG_INFINITY && **lq > f64::NEG_INFINITY)
        .map(|(lp, lq)| {
            if beta == 0.0 {
                *lq
            } else {
                beta * lp + (1.0 - beta) * lq
            }
        })
        .collect();
    log_sum_exp(&terms)
}

/// Rényi divergence of order `β ∈ [0, 1) ∪ (1, ∞)` on a mass pair.
pub fn renyi_pair(beta: f64, pair: &MassPair) -> Result<f64> {
    if !(beta >= 0.0) || beta == 1.0 || beta.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "Renyi order must lie in [0,1) or (1,inf), got {beta} (use KL for order 1)"
        )));
    }
    if beta > 1.0 {
        pair.check_absolute_continuity()?;
    }
    Ok(renyi_ln_sum(beta, pair) / (beta - 1.0))
}

/// `D^R_β(P‖P̂) = (1/(β−1)) log Σ p_i^β p̂_i^(1−β)` for `β ∈ (0,1) ∪ (1,∞)`.
pub fn renyi_finite(beta: f64, p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Renyi order must be positive, got {beta}"
        )));
    }
    renyi_pair(beta, &MassPair::from_finite(p, q)?)
}

/// `log max_i p_i/q_i` over atoms with `p_i > 0`.
pub fn max_divergence_pair(pair: &MassPair) -> Result<f64> {
    pair.check_absolute_continuity()?;
    Ok((0..pair.len())
        .map(|j| pair.ln_ratio(j))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Max-divergence `D_∞(P‖Q) = log sup p/q` on a finite support.
pub fn max_divergence_finite(p: &FiniteDist, q: &FiniteDist) -> Result<f64> {
    max_divergence_pair(&MassPair::from_finite(p, q)?)
}

/// Grid supremum of `log p(x)/q(x)` for densities, with its location.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSup<X> {
    pub value: f64,
    pub argmax: X,
    pub grid_size: usize,
}

/// Max-divergence of two densities approximated by the supremum over `grid`.
pub fn max_divergence_grid<D>(p: &D, q: &D, grid: &[D::Point]) -> Result<GridSup<D::Point>>
where
    D: Distribution,
{
    let mut best: Option<(f64, &D::Point)> = None;
    for x in grid {
        let lp = p.ln_density(x)?;
        if lp == f64::NEG_INFINITY {
            continue;
        }
        let lq = q.ln_density(x)?;
        if lq == f64::NEG_INFINITY {
            return Err(Error::AbsoluteContinuity {
                atom: 0,
                mass: lp.exp(),
            });
        }
        let v = lp - lq;
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, x));
        }
    }
    let (value, argmax) = best.ok_or_else(|| Error::InvalidParameter("empty grid".into()))?;
    Ok(GridSup {
        value,
        argmax: argmax.clone(),
        grid_size: grid.len(),
    })
}
