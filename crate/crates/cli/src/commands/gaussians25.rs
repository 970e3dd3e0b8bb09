use std::time::{Duration, Instant};

use obrs_core::dist::{grid25, grid25_modes, grid25_weighted, ratio, GaussianMixture};
use obrs_core::numeric::RunningStats;
use obrs_core::obrs::{
    drs_gamma_for_rate, rejection_sample, solve_c_k, AcceptanceSpec, MEstimate, MMode, RateProfile, SAMPLE_EPS,
};
use obrs_core::oracle::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Dirichlet;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::Finish;
use crate::args::Gaussians25Args;
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::output::{num, OutDir};

pub const DEFAULT_RATE: f64 = 0.4;
pub const METHODS: [&str; 3] = ["baseline", "obrs", "drs"];

// Streams of `derive_seed`: jitter, calibration, then one per repeat.
const JITTER_STREAM: u64 = 0;
const CALIBRATION_STREAM: u64 = 1;
const FIRST_REPEAT_STREAM: u64 = 16;

/// One method on one repeat.
#[derive(Debug, Clone, Serialize)]
pub struct Gaussians25Report {
    pub repeat: usize,
    pub method: &'static str,
    pub precision: f64,
    pub recall: f64,
    pub accepted: usize,
    pub proposals_used: usize,
    pub ratio_evals: usize,
    #[serde(skip)]
    pub wall_time: Duration,
}

/// `(1 − η)/25 + η·w` with `w` a flat Dirichlet draw.
pub fn jittered_weights<R: Rng + ?Sized>(eta: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(CliError::Usage(format!("jitter must lie in [0, 1], got {eta}")));
    }
    let dir = Dirichlet::new([1.0f64; 25]).expect("flat concentration is valid");
    let w: [f64; 25] = rng.sample(dir);
    Ok(w.iter().map(|v| (1.0 - eta) / 25.0 + eta * v).collect())
}

/// Fraction of samples within `radius` of their nearest mode, and fraction
/// of modes receiving at least `min_hits` such samples.
pub fn precision_recall(samples: &[Vec<f64>], modes: &[Vec<f64>], radius: f64, min_hits: f64) -> (f64, f64) {
    let mut hits = vec![0usize; modes.len()];
    let mut good = 0usize;
    for x in samples {
        let (best, d2) = modes
            .iter()
            .enumerate()
            .map(|(i, m)| (i, (x[0] - m[0]).powi(2) + (x[1] - m[1]).powi(2)))
            .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        if d2 <= radius * radius {
            good += 1;
            hits[best] += 1;
        }
    }
    let covered = hits.iter().filter(|h| **h as f64 >= min_hits).count();
    (good as f64 / samples.len() as f64, covered as f64 / modes.len() as f64)
}

struct Setup {
    target: GaussianMixture,
    proposal: GaussianMixture,
    modes: Vec<Vec<f64>>,
    specs: [AcceptanceSpec; 3],
}

fn run_repeat(setup: &Setup, args: &Gaussians25Args, repeat: usize) -> Result<Vec<Gaussians25Report>> {
    let seed = derive_seed(args.seed, FIRST_REPEAT_STREAM + repeat as u64);
    let r = ratio(&setup.target, &setup.proposal)?;
    let radius = args.radius_stds * args.target_std;
    let min_hits = args.samples as f64 / (25.0 * 10.0);
    METHODS
        .iter()
        .zip(&setup.specs)
        .map(|(method, spec)| {
            let t = Instant::now();
            // Same seed for every method: all three see the same proposals.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let run = rejection_sample(
                &setup.proposal,
                &r,
                spec,
                args.samples,
                &mut rng,
                args.samples.saturating_mul(1000),
            )?;
            let (precision, recall) = precision_recall(&run.samples, &setup.modes, radius, min_hits);
            Ok(Gaussians25Report {
                repeat,
                method,
                precision,
                recall,
                accepted: run.samples.len(),
                proposals_used: run.draws_used,
                ratio_evals: run.ratio_evals,
                wall_time: t.elapsed(),
            })
        })
        .collect()
}

pub fn run(args: &Gaussians25Args) -> Result<RunManifest> {
    let start = Instant::now();
    let k = args.budget.resolve(1.0 / DEFAULT_RATE)?;
    if args.samples == 0 || args.repeats == 0 || args.calibration_samples == 0 {
        return Err(CliError::Usage(
            "samples, repeats and calibration samples must be positive".into(),
        ));
    }
    let weights = jittered_weights(
        args.jitter,
        &mut ChaCha8Rng::seed_from_u64(derive_seed(args.seed, JITTER_STREAM)),
    )?;
    let target = grid25(args.target_std, args.spacing)?;
    let proposal = grid25_weighted(args.proposal_std, args.spacing, &weights)?;

    let calibration_seed = derive_seed(args.seed, CALIBRATION_STREAM);
    let profile = RateProfile::from_samples(
        &ratio(&target, &proposal)?,
        &proposal,
        args.calibration_samples,
        calibration_seed,
    )?;
    let m = MEstimate {
        ln_m: profile.ln_r_max(),
        mode: MMode::Samples {
            n: args.calibration_samples,
            seed: calibration_seed,
        },
    };
    let obrs = solve_c_k(&profile, k, m.ln_m, SAMPLE_EPS)?;
    let drs = drs_gamma_for_rate(&profile, m.ln_m, 1.0 / k, SAMPLE_EPS)?;
    let setup = Setup {
        target,
        proposal,
        modes: grid25_modes(args.spacing),
        specs: [AcceptanceSpec::Unit, obrs.spec(), drs.spec()],
    };

    let reports: Vec<Gaussians25Report> = (0..args.repeats)
        .into_par_iter()
        .map(|i| run_repeat(&setup, args, i))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let rows = reports.iter().map(|r| {
        vec![
            r.repeat.to_string(),
            r.method.to_string(),
            num(r.precision),
            num(r.recall),
            r.accepted.to_string(),
            r.proposals_used.to_string(),
            r.ratio_evals.to_string(),
            num(r.proposals_used as f64 / r.accepted as f64),
        ]
    });
    let mut summary = Vec::new();
    let mut results = Vec::new();
    for method in METHODS {
        let of = |f: fn(&Gaussians25Report) -> f64| -> RunningStats {
            reports.iter().filter(|r| r.method == method).map(f).collect()
        };
        let precision = of(|r| r.precision);
        let recall = of(|r| r.recall);
        let per = of(|r| r.proposals_used as f64 / r.accepted as f64);
        let evals = of(|r| r.ratio_evals as f64);
        let wall: f64 = reports
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.wall_time.as_secs_f64())
            .sum();
        summary.push(vec![
            method.to_string(),
            num(precision.mean()),
            num(precision.std_dev()),
            num(recall.mean()),
            num(recall.std_dev()),
            num(per.mean()),
            num(evals.mean()),
        ]);
        results.push(json!({
            "method": method,
            "precision_mean": precision.mean(),
            "precision_std": precision.std_dev(),
            "recall_mean": recall.mean(),
            "recall_std": recall.std_dev(),
            "proposals_per_accepted": per.mean(),
            "ratio_evals_mean": evals.mean(),
            "wall_time_s": wall,
        }));
    }

    let mut out = OutDir::create(&args.out)?;
    out.csv(
        "gaussians25.csv",
        &[
            "repeat",
            "method",
            "precision",
            "recall",
            "accepted",
            "proposals_used",
            "ratio_evals",
            "proposals_per_accepted",
        ],
        rows,
    )?;
    out.csv(
        "gaussians25_summary.csv",
        &[
            "method",
            "precision_mean",
            "precision_std",
            "recall_mean",
            "recall_std",
            "proposals_per_accepted",
            "ratio_evals_mean",
        ],
        summary,
    )?;
    Finish {
        command: "gaussians25",
        args,
        seed: Some(args.seed),
        out,
        start,
        results: json!({
            "k": k,
            "target_rate": 1.0 / k,
            "proposal_weights": weights,
            "m": m,
            "obrs": { "c_k": obrs.c_k, "calibrated_rate": obrs.rate, "spec": obrs.spec() },
            "drs": { "gamma": drs.gamma, "calibrated_rate": drs.rate, "spec": drs.spec() },
            "methods": results,
        }),
        checks: Vec::new(),
    }
    .write()
}
