//! `solve` and `sample` on user-supplied distributions.

use std::time::Instant;

use obrs_core::dist::{ratio, DistSpec, Distribution, FiniteDist, GaussianMixture, MassPair};
use obrs_core::obrs::{
    drs_gamma_for_rate, estimate_m_pair, rejection_sample, solve_c_k, AcceptanceSpec, MEstimate, MMode, RateProfile,
    SampleRun, EXACT_EPS, SAMPLE_EPS,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::Finish;
use crate::args::{Method, Mode, PairArgs, SampleArgs, SolveArgs};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::output::{num, read_json, OutDir};

enum Pair {
    Finite(FiniteDist, FiniteDist),
    Mixture(GaussianMixture, GaussianMixture),
}

fn load(args: &PairArgs) -> Result<Pair> {
    let p: DistSpec = read_json(&args.target)?;
    let q: DistSpec = read_json(&args.proposal)?;
    match (&p, &q) {
        (DistSpec::Finite { .. }, DistSpec::Finite { .. }) => Ok(Pair::Finite(p.to_finite()?, q.to_finite()?)),
        (DistSpec::GaussianMixture { .. }, DistSpec::GaussianMixture { .. }) => {
            Ok(Pair::Mixture(p.to_mixture()?, q.to_mixture()?))
        }
        _ => Err(CliError::Usage(
            "target and proposal must both be finite or both be mixtures".into(),
        )),
    }
}

/// An acceptance function calibrated against a pair.
#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub spec: AcceptanceSpec,
    pub method: Method,
    pub mode: Mode,
    pub m: MEstimate,
    /// Acceptance rate on the calibration profile.
    pub rate: f64,
    pub iterations: usize,
}

fn profile_for(pair: &Pair, args: &PairArgs, seed: Option<u64>) -> Result<(Mode, RateProfile, MEstimate)> {
    let mode = match (pair, args.mode) {
        (_, Some(m)) => m,
        (Pair::Finite(..), None) => Mode::Exact,
        (Pair::Mixture(p, _), None) if p.dim() == 1 => Mode::Quadrature,
        (Pair::Mixture(..), None) => Mode::Mc,
    };
    let exact = |mp: MassPair| -> Result<(Mode, RateProfile, MEstimate)> {
        Ok((mode, RateProfile::from_pair(&mp)?, estimate_m_pair(&mp)?))
    };
    let sampled = |profile: RateProfile, n: usize, seed: u64| {
        let m = MEstimate {
            ln_m: profile.ln_r_max(),
            mode: MMode::Samples { n, seed },
        };
        Ok((mode, profile, m))
    };
    let need_seed = || seed.ok_or_else(|| CliError::Usage("--seed is required in mc mode".into()));
    let n = args.calibration_samples;
    match (pair, mode) {
        (Pair::Finite(p, q), Mode::Exact) => exact(MassPair::from_finite(p, q)?),
        (Pair::Mixture(p, q), Mode::Quadrature) if p.dim() == 1 => {
            exact(MassPair::from_quadrature(p, q, &args.quad.quadrature())?)
        }
        (Pair::Finite(p, q), Mode::Mc) => {
            let s = need_seed()?;
            sampled(RateProfile::from_samples(&ratio(p, q)?, q, n, s)?, n, s)
        }
        (Pair::Mixture(p, q), Mode::Mc) => {
            let s = need_seed()?;
            sampled(RateProfile::from_samples(&ratio(p, q)?, q, n, s)?, n, s)
        }
        (_, m) => Err(CliError::Usage(format!("mode {m:?} does not apply to this pair"))),
    }
}

fn calibrate(pair: &Pair, args: &PairArgs, method: Method, k: f64, seed: Option<u64>) -> Result<Calibration> {
    let (mode, profile, m) = profile_for(pair, args, seed)?;
    let eps = if mode == Mode::Mc { SAMPLE_EPS } else { EXACT_EPS };
    let (spec, iterations) = match method {
        Method::Obrs => {
            let s = solve_c_k(&profile, k, m.ln_m, eps)?;
            (s.spec(), s.iterations)
        }
        Method::Drs => {
            let s = drs_gamma_for_rate(&profile, m.ln_m, 1.0 / k, eps)?;
            (s.spec(), s.iterations)
        }
        Method::Unbudgeted => (AcceptanceSpec::unbudgeted(m.m())?, 0),
        Method::Unit => (AcceptanceSpec::Unit, 0),
    };
    let rate = spec.ln_scale().map_or(1.0, |s| profile.rate(s));
    Ok(Calibration {
        spec,
        method,
        mode,
        m,
        rate,
        iterations,
    })
}

fn budget_needed(method: Method, has_budget: bool) -> Result<()> {
    if matches!(method, Method::Obrs | Method::Drs) && !has_budget {
        return Err(CliError::Usage("give --budget or --rate".into()));
    }
    Ok(())
}

pub fn solve(args: &SolveArgs) -> Result<RunManifest> {
    let start = Instant::now();
    let has_budget = args.budget.budget.is_some() || args.budget.rate.is_some();
    budget_needed(args.method, has_budget)?;
    let k = args.budget.resolve(1.0)?;
    let pair = load(&args.pair)?;
    let cal = calibrate(&pair, &args.pair, args.method, k, args.seed)?;
    let mut out = OutDir::create(&args.out)?;
    out.json("acceptance.json", &cal.spec)?;
    Finish {
        command: "solve",
        args,
        seed: args.seed,
        out,
        start,
        results: json!({ "k": k, "calibration": cal }),
        checks: Vec::new(),
    }
    .write()
}

fn draw<D>(proposal: &D, target: &D, spec: &AcceptanceSpec, args: &SampleArgs) -> Result<SampleRun<D::Point>>
where
    D: Distribution,
    D::Point: std::fmt::Debug,
{
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let max_draws = args.max_draws.unwrap_or(args.n.saturating_mul(1000));
    Ok(rejection_sample(
        proposal,
        &ratio(target, proposal)?,
        spec,
        args.n,
        &mut rng,
        max_draws,
    )?)
}

pub fn run(args: &SampleArgs) -> Result<RunManifest> {
    let start = Instant::now();
    if args.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let pair = load(&args.pair)?;
    let (spec, calibration) = match &args.acceptance {
        Some(path) => (read_json::<AcceptanceSpec>(path)?, None),
        None => {
            let method = args.method.unwrap_or(Method::Obrs);
            budget_needed(method, args.budget.budget.is_some() || args.budget.rate.is_some())?;
            let k = args.budget.resolve(1.0)?;
            let cal = calibrate(&pair, &args.pair, method, k, Some(args.seed))?;
            (cal.spec, Some(cal))
        }
    };
    let mut out = OutDir::create(&args.out)?;
    let (draws_used, accepted, ratio_evals) = match &pair {
        Pair::Finite(p, q) => {
            let run = draw(q, p, &spec, args)?;
            out.csv(
                "samples.csv",
                &["atom"],
                run.samples.iter().map(|a| vec![a.to_string()]),
            )?;
            (run.draws_used, run.samples.len(), run.ratio_evals)
        }
        Pair::Mixture(p, q) => {
            let run = draw(q, p, &spec, args)?;
            let header: Vec<String> = (0..q.dim()).map(|d| format!("x{d}")).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            out.csv(
                "samples.csv",
                &header,
                run.samples.iter().map(|x| x.iter().map(|v| num(*v)).collect()),
            )?;
            (run.draws_used, run.samples.len(), run.ratio_evals)
        }
    };
    Finish {
        command: "sample",
        args,
        seed: Some(args.seed),
        out,
        start,
        results: json!({
            "seed": args.seed,
            "n_target": args.n,
            "draws_used": draws_used,
            "measured_rate": accepted as f64 / draws_used as f64,
            "ratio_evals": ratio_evals,
            "acceptance": spec,
            "calibration": calibration,
        }),
        checks: Vec::new(),
    }
    .write()
}
