//! Brute-force checks of OBRS on small finite supports.
//!
//! - [`optimality_check`] compares OBRS against many random acceptance
//!   functions with the same rate, for several generators at once.
//! - [`bound_check_general`] evaluates the linear-in-`K` improvement bound
//!   `D_f(P‖P̃) ≤ (1 − min(1, (K−1)/M))·D_f(P‖P̂)` and its feasible witness
//!   `p_α = p̂ + α(p − p̂)`.
//! - [`bound_check_kl`] evaluates the KL bound
//!   `KL(P‖P̃) ≤ (1 − γ)(KL(P‖P̂) − D^R_γ(P‖P̂))`, `γ = log K / log M`, and the
//!   geometric witness `p_γ ∝ p̂^{1−γ} p^γ`. This bound is reported, never
//!   asserted: it fails on small instances such as `P = (0.5, 0.5)`,
//!   `P̂ = (0.8, 0.2)`, `K = 2`, where the witness itself leaves the ball.
//! - [`ball_membership`] tests `max_x p̃/p̂ ≤ K`.
//!
//! Random instances draw `P` and `P̂` from a flat Dirichlet with every atom
//! floored at `1e−4`, and `K` log-uniformly in `[1, M]`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{FiniteDist, MassPair};
use crate::error::{Error, Result};
use crate::fdiv::{divergence_finite, divergence_pair, max_divergence_finite, renyi_finite, Generator};
use crate::numeric::sum_compensated;
use crate::obrs::{
    acceptance_from_target, estimate_m_pair, refine_pair, refine_with_table, solve_c_k_pair, AcceptanceTable, BALL_TOL,
};

/// Tolerance for comparisons of exact finite-support values.
pub const EXACT_TOL: f64 = 1e-9;
/// Tolerance for the improvement bound.
pub const BOUND_TOL: f64 = 1e-10;
/// Smallest atom mass in random instances.
pub const ATOM_FLOOR: f64 = 1e-4;

/// An acceptance vector with rate `1/K`.
pub type FeasibleAcceptance = AcceptanceTable;

/// Seed for item `index` of a run seeded with `seed`, drawn from its own
/// ChaCha stream.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

/// Flat Dirichlet draw on `n` atoms, floored at [`ATOM_FLOOR`].
pub fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<FiniteDist> {
    if n == 0 || n as f64 * ATOM_FLOOR >= 1.0 {
        return Err(Error::InvalidParameter(format!("cannot draw {n} floored atoms")));
    }
    let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total = sum_compensated(e.iter().copied());
    let scale = 1.0 - n as f64 * ATOM_FLOOR;
    FiniteDist::from_weights(&e.iter().map(|v| ATOM_FLOOR + scale * v / total).collect::<Vec<_>>())
}

/// A random `(P, P̂, K)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub p: FiniteDist,
    pub q: FiniteDist,
    pub k: f64,
    /// Exact `max p/p̂`.
    pub m: f64,
}

impl Instance {
    pub fn new(p: FiniteDist, q: FiniteDist, k: f64) -> Result<Self> {
        let m = estimate_m_pair(&MassPair::from_finite(&p, &q)?)?.m();
        Ok(Self { p, q, k, m })
    }

    pub fn pair(&self) -> MassPair {
        MassPair::from_finite(&self.p, &self.q).expect("instance atoms agree")
    }

    /// `P = (0.5, 0.5)`, `P̂ = (0.8, 0.2)`, `K = 2`.
    pub fn two_point() -> Self {
        Self::new(
            FiniteDist::new(vec![0.5, 0.5]).expect("valid"),
            FiniteDist::new(vec![0.8, 0.2]).expect("valid"),
            2.0,
        )
        .expect("valid")
    }
}

/// Random instance on `n_atoms` atoms with `K = M^u`, `u ~ U[0, 1]`.
pub fn random_instance<R: Rng + ?Sized>(n_atoms: usize, rng: &mut R) -> Result<Instance> {
    let p = random_simplex(n_atoms, rng)?;
    let q = random_simplex(n_atoms, rng)?;
    let mut inst = Instance::new(p, q, 1.0)?;
    inst.k = inst.m.powf(rng.random::<f64>()).max(1.0);
    Ok(inst)
}

/// Random instance with a size drawn uniformly from `2..=max_atoms`.
pub fn random_instance_up_to<R: Rng + ?Sized>(max_atoms: usize, rng: &mut R) -> Result<Instance> {
    let n = rng.random_range(2..=max_atoms.max(2));
    random_instance(n, rng)
}

/// Draws `a ~ U[0,1]^n` and rescales it to rate exactly `1/K`.
///
/// Multiplicative rescaling toward the target runs first; a water-level
/// step on the unclipped coordinates then closes the remaining gap exactly.
pub fn random_feasible_acceptance<R: Rng + ?Sized>(q: &FiniteDist, k: f64, rng: &mut R) -> Result<FeasibleAcceptance> {
    if !(k >= 1.0) || k.is_infinite() {
        return Err(Error::InvalidParameter(format!(
            "budget K must be finite and >= 1, got {k}"
        )));
    }
    let probs = q.probs();
    if k == 1.0 {
        // Rate one forces a ≡ 1.
        return Ok(AcceptanceTable {
            values: vec![1.0; probs.len()],
            rate: 1.0,
        });
    }
    let target = 1.0 / k;
    let rate_of = |a: &[f64]| sum_compensated(probs.iter().zip(a).map(|(q, a)| q * a));
    let mut a: Vec<f64> = (0..probs.len()).map(|_| rng.random::<f64>()).collect();
    for _ in 0..20 {
        let rate = rate_of(&a);
        if (rate - target).abs() <= 1e-12 || rate == 0.0 {
            break;
        }
        let f = target / rate;
        a.iter_mut().for_each(|v| *v = (*v * f).min(1.0));
    }
    for _ in 0..=probs.len() {
        let rate = rate_of(&a);
        if (rate - target).abs() <= 1e-15 {
            break;
        }
        if rate > target {
            let f = target / rate;
            a.iter_mut().for_each(|v| *v *= f);
            continue;
        }
        let clipped = sum_compensated(probs.iter().zip(&a).filter(|(_, a)| **a >= 1.0).map(|(q, _)| *q));
        let free = sum_compensated(probs.iter().zip(&a).filter(|(_, a)| **a < 1.0).map(|(q, a)| q * a));
        if free <= 0.0 {
            // Everything left is clipped or zero: raise zero entries uniformly.
            let zero_mass = sum_compensated(probs.iter().zip(&a).filter(|(_, a)| **a == 0.0).map(|(q, _)| *q));
            if zero_mass <= 0.0 {
                break;
            }
            let lift = ((target - clipped) / zero_mass).min(1.0);
            a.iter_mut().filter(|v| **v == 0.0).for_each(|v| *v = lift);
            continue;
        }
        let f = (target - clipped) / free;
        a.iter_mut().filter(|v| **v < 1.0).for_each(|v| *v = (*v * f).min(1.0));
    }
    let rate = rate_of(&a);
    if (rate - target).abs() > EXACT_TOL {
        return Err(Error::NoConvergence {
            iterations: probs.len() + 21,
            lo: rate,
            hi: rate,
            residual: rate - target,
        });
    }
    Ok(AcceptanceTable { values: a, rate })
}

/// Generic bound comparison `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// `rhs − lhs`.
    pub slack: f64,
    pub witness: Option<usize>,
}

impl BoundReport {
    fn new(lhs: f64, rhs: f64, tol: f64, witness: Option<usize>) -> Self {
        Self {
            lhs,
            rhs,
            satisfied: lhs <= rhs + tol,
            slack: rhs - lhs,
            witness,
        }
    }
}

/// Per-generator outcome of an optimality sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorVerdict {
    pub generator: Generator,
    /// `D_f(P‖P̃_OBRS)`.
    pub obrs_value: f64,
    /// Smallest `D_f(P‖P̃_random) − D_f(P‖P̃_OBRS)` over trials.
    pub min_gap: f64,
    pub violations: usize,
    /// Acceptance vector of the worst violation, if any.
    pub worst: Option<Vec<f64>>,
}

/// Outcome of [`optimality_check`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub k: f64,
    pub trials: usize,
    pub verdicts: Vec<GeneratorVerdict>,
}

impl OptimalityReport {
    pub fn violations(&self) -> usize {
        self.verdicts.iter().map(|v| v.violations).sum()
    }
}

/// Refines `q` with the OBRS function for budget `k` and evaluates
/// `D_f(P‖P̃)` for each generator.
pub fn obrs_divergences(gens: &[Generator], p: &FiniteDist, q: &FiniteDist, k: f64) -> Result<Vec<f64>> {
    let pair = MassPair::from_finite(p, q)?;
    let refined = refine_pair(&pair, &solve_c_k_pair(&pair, k)?.spec())?;
    let tp = refined.target_pair(&pair)?;
    gens.iter().map(|g| divergence_pair(g, &tp)).collect()
}

/// Tries `trials` random acceptance functions of rate `1/K` against OBRS.
/// Trial `i` draws from its own stream of `seed`, so the report does not
/// depend on scheduling.
pub fn optimality_check(
    gens: &[Generator],
    p: &FiniteDist,
    q: &FiniteDist,
    k: f64,
    trials: usize,
    seed: u64,
) -> Result<OptimalityReport> {
    let obrs = obrs_divergences(gens, p, q, k)?;
    let pair = MassPair::from_finite(p, q)?;
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let a = random_feasible_acceptance(q, k, &mut rng)?;
            let refined = refine_with_table(q, &a)?;
            let tp = refined.target_pair(&pair)?;
            let gaps = gens
                .iter()
                .zip(&obrs)
                .map(|(g, o)| Ok(divergence_pair(g, &tp)? - o))
                .collect::<Result<Vec<f64>>>()?;
            Ok((a.values, gaps))
        })
        .collect::<Result<Vec<_>>>()?;
    let verdicts = gens
        .iter()
        .enumerate()
        .map(|(gi, g)| {
            let mut min_gap = f64::INFINITY;
            let mut violations = 0;
            let mut worst = None;
            for (a, gaps) in &outcomes {
                let gap = gaps[gi];
                if gap < -EXACT_TOL {
                    violations += 1;
                }
                if gap < min_gap {
                    min_gap = gap;
                    if gap < -EXACT_TOL {
                        worst = Some(a.clone());
                    }
                }
            }
            GeneratorVerdict {
                generator: *g,
                obrs_value: obrs[gi],
                min_gap,
                violations,
                worst,
            }
        })
        .collect();
    Ok(OptimalityReport { k, trials, verdicts })
}

/// Improvement bound for one generator, with the interpolation witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralBoundReport {
    pub generator: Generator,
    pub k: f64,
    pub m: f64,
    /// Both sides shifted by `−f(1)`.
    pub bound: BoundReport,
    /// `min(1, (K−1)·min p̂/p)`.
    pub alpha: f64,
    /// `p_α ≤ K p̂` on every atom.
    pub witness_feasible: bool,
    /// `D_f(P‖P_α) − f(1)`.
    pub witness_divergence: f64,
    /// OBRS does at least as well as the witness.
    pub witness_dominated: bool,
}

impl GeneralBoundReport {
    pub fn holds(&self) -> bool {
        self.bound.satisfied && self.witness_feasible && self.witness_dominated
    }
}

/// Checks `D_f(P‖P̃) − f(1) ≤ (1 − min(1, (K−1)/M))(D_f(P‖P̂) − f(1))`.
pub fn bound_check_general(
    generator: &Generator,
    p: &FiniteDist,
    q: &FiniteDist,
    k: f64,
) -> Result<GeneralBoundReport> {
    let pair = MassPair::from_finite(p, q)?;
    let m = estimate_m_pair(&pair)?.m();
    let shift = generator.offset();
    let lhs = obrs_divergences(std::slice::from_ref(generator), p, q, k)?[0] - shift;
    let base = divergence_finite(generator, p, q)?.value - shift;
    let rhs = (1.0 - ((k - 1.0) / m).min(1.0)) * base;

    let (argmin, min_ratio) = p
        .probs()
        .iter()
        .zip(q.probs())
        .enumerate()
        .filter(|(_, (pi, _))| **pi > 0.0)
        .map(|(i, (pi, qi))| (i, qi / pi))
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    let alpha = ((k - 1.0) * min_ratio).min(1.0);
    let p_alpha: Vec<f64> = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(pi, qi)| qi + alpha * (pi - qi))
        .collect();
    let witness_feasible = p_alpha
        .iter()
        .zip(q.probs())
        .all(|(pa, qi)| *pa <= k * qi * (1.0 + BALL_TOL));
    let witness_divergence = divergence_finite(generator, p, &FiniteDist::from_weights(&p_alpha)?)?.value - shift;
    Ok(GeneralBoundReport {
        generator: *generator,
        k,
        m,
        bound: BoundReport::new(lhs, rhs, BOUND_TOL, Some(argmin)),
        alpha,
        witness_feasible,
        witness_divergence,
        witness_dominated: lhs <= witness_divergence + BOUND_TOL,
    })
}

/// KL bound with the Rényi term and the geometric witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KlBoundReport {
    pub k: f64,
    pub m: f64,
    /// `log K / log M`, clipped to `[0, 1]`.
    pub gamma: f64,
    pub kl: f64,
    /// `D^R_γ(P‖P̂)`; zero in the limit cases.
    pub renyi: f64,
    pub bound: BoundReport,
    /// `p_γ ≤ K p̂` on every atom.
    pub witness_feasible: bool,
    /// Atom with the largest `p_γ/(K p̂)` when that exceeds one.
    pub violating_atom: Option<usize>,
    /// `p_γ` itself.
    pub witness: Vec<f64>,
    /// `K ≥ M` or `M = 1`: `γ` is taken as 1 and the right side as 0.
    pub limit_case: bool,
}

/// Evaluates the KL–Rényi bound. Returns the comparison without asserting it.
pub fn bound_check_kl(p: &FiniteDist, q: &FiniteDist, k: f64) -> Result<KlBoundReport> {
    let pair = MassPair::from_finite(p, q)?;
    let ln_m = estimate_m_pair(&pair)?.ln_m;
    let lhs = obrs_divergences(&[Generator::Kl], p, q, k)?[0];
    let kl = divergence_finite(&Generator::Kl, p, q)?.value;
    let limit_case = ln_m <= 1e-15 || k.ln() >= ln_m;
    let gamma = if limit_case { 1.0 } else { k.ln() / ln_m };
    let (renyi, rhs) = if limit_case {
        (0.0, 0.0)
    } else if gamma == 0.0 {
        // Order 0: −log P̂(p > 0), which vanishes under full support.
        let mass: f64 = sum_compensated(
            p.probs()
                .iter()
                .zip(q.probs())
                .filter(|(pi, _)| **pi > 0.0)
                .map(|(_, qi)| *qi),
        );
        let r0 = -mass.ln();
        (r0, kl - r0)
    } else {
        let r = renyi_finite(gamma, p, q)?;
        (r, (1.0 - gamma) * (kl - r))
    };
    let raw: Vec<f64> = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(pi, qi)| {
            if *qi == 0.0 || (*pi == 0.0 && gamma > 0.0) {
                0.0
            } else {
                (gamma * pi.ln() + (1.0 - gamma) * qi.ln()).exp()
            }
        })
        .collect();
    let z = sum_compensated(raw.iter().copied());
    let witness: Vec<f64> = raw.iter().map(|v| v / z).collect();
    let mut worst: Option<(usize, f64)> = None;
    for (i, (w, qi)) in witness.iter().zip(q.probs()).enumerate() {
        let excess = w / (k * qi);
        if excess > 1.0 + BALL_TOL && worst.is_none_or(|(_, e)| excess > e) {
            worst = Some((i, excess));
        }
    }
    let violating_atom = worst.map(|(i, _)| i);
    Ok(KlBoundReport {
        k,
        m: ln_m.exp(),
        gamma,
        kl,
        renyi,
        bound: BoundReport::new(lhs, rhs, BOUND_TOL, violating_atom),
        witness_feasible: violating_atom.is_none(),
        violating_atom,
        witness,
        limit_case,
    })
}

/// Outcome of [`ball_membership`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallReport {
    pub member: bool,
    /// `log max p̃/p̂`.
    pub max_divergence: f64,
    pub ln_k: f64,
    /// Atom attaining the maximum ratio when outside the ball.
    pub witness_atom: Option<usize>,
    /// Acceptance function realizing `P̃` at rate `1/K` when inside.
    pub acceptance: Option<AcceptanceTable>,
}

/// Tests whether `P̃` lies in the ball `{max p̃/p̂ ≤ K}` around `P̂`.
pub fn ball_membership(tilde: &FiniteDist, q: &FiniteDist, k: f64) -> Result<BallReport> {
    let ln_k = k.ln();
    let max_divergence = match max_divergence_finite(tilde, q) {
        Ok(v) => v,
        Err(Error::AbsoluteContinuity { atom, .. }) => {
            return Ok(BallReport {
                member: false,
                max_divergence: f64::INFINITY,
                ln_k,
                witness_atom: Some(atom),
                acceptance: None,
            })
        }
        Err(e) => return Err(e),
    };
    if max_divergence <= ln_k + BALL_TOL {
        let acceptance = acceptance_from_target(tilde, q, k)?;
        return Ok(BallReport {
            member: true,
            max_divergence,
            ln_k,
            witness_atom: None,
            acceptance: Some(acceptance),
        });
    }
    let witness_atom = tilde
        .probs()
        .iter()
        .zip(q.probs())
        .enumerate()
        .filter(|(_, (t, _))| **t > 0.0)
        .map(|(i, (t, qi))| (i, t / qi))
        .fold(None, |best: Option<(usize, f64)>, c| match best {
            Some(b) if b.1 >= c.1 => Some(b),
            _ => Some(c),
        })
        .map(|(i, _)| i);
    Ok(BallReport {
        member: false,
        max_divergence,
        ln_k,
        witness_atom,
        acceptance: None,
    })
}

/// Which bound a [`BoundRow`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    General,
    KlRenyi,
}

/// One exported bound evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundRow {
    pub instance_seed: u64,
    pub bound: BoundKind,
    pub generator: Generator,
    pub k: f64,
    pub m: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub slack: f64,
    pub witness_feasible: bool,
}

/// Bound evaluations over random instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsSweep {
    pub instances: usize,
    pub rows: Vec<BoundRow>,
    /// Failures of the general bound or its witness.
    pub general_violations: usize,
    pub kl_renyi_violations: usize,
    pub kl_renyi_violation_rate: f64,
}

fn bound_rows(instance_seed: u64, inst: &Instance) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::new();
    for g in Generator::all_primal() {
        let r = bound_check_general(&g, &inst.p, &inst.q, inst.k)?;
        rows.push(BoundRow {
            instance_seed,
            bound: BoundKind::General,
            generator: g,
            k: inst.k,
            m: inst.m,
            lhs: r.bound.lhs,
            rhs: r.bound.rhs,
            satisfied: r.bound.satisfied && r.witness_dominated,
            slack: r.bound.slack,
            witness_feasible: r.witness_feasible,
        });
    }
    let r = bound_check_kl(&inst.p, &inst.q, inst.k)?;
    rows.push(BoundRow {
        instance_seed,
        bound: BoundKind::KlRenyi,
        generator: Generator::Kl,
        k: inst.k,
        m: inst.m,
        lhs: r.bound.lhs,
        rhs: r.bound.rhs,
        satisfied: r.bound.satisfied,
        slack: r.bound.slack,
        witness_feasible: r.witness_feasible,
    });
    Ok(rows)
}

/// Evaluates both bounds on `instances` random instances of up to
/// `max_atoms` atoms. Instance `i` is generated from `derive_seed(seed, i)`.
pub fn bounds_sweep(instances: usize, max_atoms: usize, seed: u64) -> Result<BoundsSweep> {
    let per = (0..instances)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i as u64);
            let inst = random_instance_up_to(max_atoms, &mut ChaCha8Rng::seed_from_u64(s))?;
            bound_rows(s, &inst)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<BoundRow> = per.into_iter().flatten().collect();
    let general_violations = rows
        .iter()
        .filter(|r| r.bound == BoundKind::General && !(r.satisfied && r.witness_feasible))
        .count();
    let kl_renyi_violations = rows
        .iter()
        .filter(|r| r.bound == BoundKind::KlRenyi && !r.satisfied)
        .count();
    Ok(BoundsSweep {
        instances,
        general_violations,
        kl_renyi_violations,
        kl_renyi_violation_rate: if instances == 0 {
            0.0
        } else {
            kl_renyi_violations as f64 / instances as f64
        },
        rows,
    })
}

/// Bound rows for the fixed two-point instance, tagged with seed 0.
pub fn two_point_bound_rows() -> Result<Vec<BoundRow>> {
    bound_rows(0, &Instance::two_point())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obrs::refined_finite;
    use proptest::prelude::*;

    #[test]
    fn feasible_acceptance_examples() {
        let q = FiniteDist::new(vec![0.8, 0.2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let unit = random_feasible_acceptance(&q, 1.0, &mut rng).unwrap();
        assert!(unit.values.iter().all(|a| *a == 1.0));
        let half = random_feasible_acceptance(&q, 2.0, &mut rng).unwrap();
        assert!((half.rate - 0.5).abs() <= 1e-15);
        assert!((0.8 * half.values[0] + 0.2 * half.values[1] - 0.5).abs() <= 1e-15);
        let wide = random_simplex(20, &mut rng).unwrap();
        for _ in 0..1000 {
            let a = random_feasible_acceptance(&wide, 7.0, &mut rng).unwrap();
            assert!(a.values.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((a.rate - 1.0 / 7.0).abs() <= EXACT_TOL);
        }
        assert!(random_feasible_acceptance(&q, 0.5, &mut rng).is_err());
    }

    #[test]
    fn random_simplex_respects_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d = random_simplex(32, &mut rng).unwrap();
            assert!(d.probs().iter().all(|p| *p >= ATOM_FLOOR * (1.0 - 1e-12)));
        }
    }

    #[test]
    fn optimality_two_point() {
        let inst = Instance::two_point();
        let rep = optimality_check(&[Generator::Kl], &inst.p, &inst.q, 2.0, 1000, 5).unwrap();
        assert_eq!(rep.violations(), 0);
        let v = &rep.verdicts[0];
        let hand = 0.5 * (0.5f64 / 0.6).ln() + 0.5 * (0.5f64 / 0.4).ln();
        assert!((v.obrs_value - hand).abs() < 1e-12);
        assert!((v.obrs_value - 0.0204).abs() < 1e-4);
        assert!(v.min_gap >= -EXACT_TOL);
    }

    #[test]
    fn optimality_unit_budget_ties() {
        let inst = Instance::two_point();
        let rep = optimality_check(&Generator::all_primal(), &inst.p, &inst.q, 1.0, 50, 5).unwrap();
        for v in &rep.verdicts {
            assert!(v.min_gap.abs() <= 1e-12, "{v:?}");
        }
    }

    #[test]
    fn optimality_random_gan_instance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_simplex(8, &mut rng).unwrap();
        let q = random_simplex(8, &mut rng).unwrap();
        let inst = Instance::new(p, q, 3.0).unwrap();
        let k = inst.k.min(inst.m);
        let rep = optimality_check(&[Generator::Gan], &inst.p, &inst.q, k, 1000, 2).unwrap();
        assert_eq!(rep.violations(), 0);
    }

    #[test]
    fn optimality_report_is_deterministic() {
        let inst = Instance::two_point();
        let a = optimality_check(&Generator::all_primal(), &inst.p, &inst.q, 1.7, 100, 3).unwrap();
        let b = optimality_check(&Generator::all_primal(), &inst.p, &inst.q, 1.7, 100, 3).unwrap();
        for (x, y) in a.verdicts.iter().zip(&b.verdicts) {
            assert_eq!(x.min_gap, y.min_gap);
        }
    }

    #[test]
    fn general_bound_two_point() {
        let inst = Instance::two_point();
        let r = bound_check_general(&Generator::Kl, &inst.p, &inst.q, 2.0).unwrap();
        assert!((r.bound.lhs - 0.0204).abs() < 1e-4);
        let kl = 0.5 * 0.625f64.ln() + 0.5 * 2.5f64.ln();
        assert!((r.bound.rhs - 0.6 * kl).abs() < 1e-14);
        assert!((r.bound.rhs - 0.1339).abs() < 1e-4);
        assert!(r.holds());
        assert!((r.alpha - 0.4).abs() < 1e-15);
        let wd = 0.5 * (0.5f64 / 0.68).ln() + 0.5 * (0.5f64 / 0.32).ln();
        assert!((r.witness_divergence - wd).abs() < 1e-14);
        assert!((r.witness_divergence - 0.0694).abs() < 1e-4);
    }

    #[test]
    fn general_bound_limits() {
        let inst = Instance::two_point();
        let r = bound_check_general(&Generator::Kl, &inst.p, &inst.q, 1.0).unwrap();
        assert!((r.bound.lhs - r.bound.rhs).abs() < 1e-15 && r.bound.satisfied);
        let r = bound_check_general(&Generator::Kl, &inst.p, &inst.q, 3.5).unwrap();
        assert!(r.bound.lhs.abs() < 1e-12 && r.holds());
        let g = bound_check_general(&Generator::Gan, &inst.p, &inst.q, 2.0).unwrap();
        assert!(g.holds() && g.bound.lhs >= -1e-12);
    }

    #[test]
    fn kl_bound_two_point_counterexample() {
        let inst = Instance::two_point();
        let r = bound_check_kl(&inst.p, &inst.q, 2.0).unwrap();
        assert!((r.bound.lhs - 0.0204).abs() < 1e-4);
        assert!((r.bound.rhs - 0.0141).abs() < 1e-4);
        assert!(!r.bound.satisfied);
        assert!(!r.witness_feasible);
        assert_eq!(r.violating_atom, Some(1));
        assert!((r.witness[1] - 0.4164).abs() < 1e-4);
        assert!((r.gamma - 2f64.ln() / 2.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn kl_bound_limits() {
        let inst = Instance::two_point();
        let same = bound_check_kl(&inst.p, &inst.p, 2.0).unwrap();
        assert!(same.bound.lhs.abs() < 1e-15 && same.bound.rhs == 0.0 && same.bound.satisfied);
        let at_m = bound_check_kl(&inst.p, &inst.q, 2.5).unwrap();
        assert!(at_m.limit_case && at_m.bound.rhs == 0.0);
        assert!(at_m.bound.lhs.abs() < 1e-12);
        let unit = bound_check_kl(&inst.p, &inst.q, 1.0).unwrap();
        assert!((unit.bound.lhs - unit.bound.rhs).abs() < 1e-12);
    }

    #[test]
    fn ball_membership_examples() {
        let inst = Instance::two_point();
        for k in [1.0, 2.0, 7.0] {
            assert!(ball_membership(&inst.q, &inst.q, k).unwrap().member);
        }
        let r = crate::dist::ratio(&inst.p, &inst.q).unwrap();
        let spec = solve_c_k_pair(&inst.pair(), 2.0).unwrap().spec();
        let refined = refined_finite(&inst.q, &r, &spec).unwrap();
        let rep = ball_membership(&refined.to_finite().unwrap(), &inst.q, 2.0).unwrap();
        assert!(rep.member);
        let a = rep.acceptance.unwrap();
        assert!((a.values[0] - 0.375).abs() < 1e-12 && (a.values[1] - 1.0).abs() < 1e-12);
        let far = FiniteDist::new(vec![0.1, 0.9]).unwrap();
        let out = ball_membership(&far, &inst.q, 2.0).unwrap();
        assert!(!out.member);
        assert_eq!(out.witness_atom, Some(1));
    }

    #[test]
    fn bounds_sweep_small() {
        let sweep = bounds_sweep(20, 32, 11).unwrap();
        assert_eq!(sweep.general_violations, 0);
        assert_eq!(sweep.rows.len(), 20 * 6);
        let again = bounds_sweep(20, 32, 11).unwrap();
        assert_eq!(
            serde_json::to_string(&sweep.rows).unwrap(),
            serde_json::to_string(&again.rows).unwrap()
        );
        let canonical = two_point_bound_rows().unwrap();
        assert!(canonical.iter().any(|r| r.bound == BoundKind::KlRenyi && !r.satisfied));
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        any::<u64>().prop_map(|s| random_instance_up_to(32, &mut ChaCha8Rng::seed_from_u64(s)).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn general_bound_and_witness_hold(inst in arb_instance()) {
            for g in Generator::all_primal() {
                let r = bound_check_general(&g, &inst.p, &inst.q, inst.k).unwrap();
                prop_assert!(r.holds(), "{:?}", r);
            }
        }

        #[test]
        fn ball_both_directions(inst in arb_instance(), spread in 1.0f64..4.0) {
            let r = crate::dist::ratio(&inst.p, &inst.q).unwrap();
            let spec = solve_c_k_pair(&inst.pair(), inst.k).unwrap().spec();
            let refined = refined_finite(&inst.q, &r, &spec).unwrap().to_finite().unwrap();
            prop_assert!(ball_membership(&refined, &inst.q, inst.k).unwrap().member);
            // Pushing mass onto the least likely atom leaves any ball of
            // radius below its ratio.
            let (j, qmin) = inst.q.probs().iter().copied().enumerate()
                .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
            let mut w: Vec<f64> = inst.q.probs().to_vec();
            w[j] = 0.5;
            let t = FiniteDist::from_weights(&w).unwrap();
            let k_small = (t.probs()[j] / qmin) / spread.max(1.0 + 1e-6);
            if k_small >= 1.0 && k_small < t.probs()[j] / qmin * (1.0 - 1e-9) {
                prop_assert!(!ball_membership(&t, &inst.q, k_small).unwrap().member);
            }
        }
    }
}
