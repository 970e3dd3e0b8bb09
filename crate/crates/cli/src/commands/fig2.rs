use std::time::Instant;

use obrs_core::dist::{bimodal_pair, MassPair};
use obrs_core::numeric::linear_grid;
use obrs_core::obrs::{
    drs_gamma_for_rate, refine_pair, solve_c_k, AcceptanceSpec, BudgetRegime, RateProfile, EXACT_EPS,
};
use obrs_core::prcurve::{default_lambda_grid, pr_curve_pair, verify_pr_transform};
use serde_json::json;

use super::Finish;
use crate::args::Fig2Args;
use crate::error::{CliError, Result};
use crate::manifest::{Check, RunManifest};
use crate::output::{num, OutDir};

pub const RATE_TOL: f64 = 1e-3;
pub const TRANSFORM_TOL: f64 = 1e-4;
pub const IDENTITY_TOL: f64 = 1e-10;

pub fn run(args: &Fig2Args) -> Result<RunManifest> {
    let start = Instant::now();
    let k = args.budget.resolve(2.0)?;
    if args.x_points < 2 || !(args.x_max > args.x_min) {
        return Err(CliError::Usage("need x_min < x_max and at least two x points".into()));
    }
    let (p, q) = bimodal_pair();
    let pair = MassPair::from_quadrature(&p, &q, &args.quad.quadrature())?;
    let profile = RateProfile::from_pair(&pair)?;
    let ln_m = profile.ln_r_max();
    let m = ln_m.exp();

    let obrs = solve_c_k(&profile, k, ln_m, EXACT_EPS)?;
    let obrs_spec = obrs.spec();
    let obrs_ref = refine_pair(&pair, &obrs_spec)?;
    let drs = drs_gamma_for_rate(&profile, ln_m, obrs_ref.z(), EXACT_EPS)?;
    let drs_spec = drs.spec();
    let drs_ref = refine_pair(&pair, &drs_spec)?;
    let unb = AcceptanceSpec::unbudgeted(m)?;
    let unb_ref = refine_pair(&pair, &unb)?;
    let c_one = AcceptanceSpec::obrs(k, 1.0, m)?;

    let xs = linear_grid(args.x_min, args.x_max, args.x_points);
    let mut densities = Vec::with_capacity(xs.len());
    let mut acceptance = Vec::with_capacity(xs.len());
    let mut unb_vs_c_one: f64 = 0.0;
    for x in &xs {
        let lp = p.ln_pdf(&[*x])?;
        let lq = q.ln_pdf(&[*x])?;
        let ln_r = lp - lq;
        let la_obrs = obrs_spec.ln_accept(ln_r);
        let la_drs = drs_spec.ln_accept(ln_r);
        let la_unb = unb.ln_accept(ln_r);
        unb_vs_c_one = unb_vs_c_one.max((la_unb.exp() - c_one.ln_accept(ln_r).exp()).abs());
        densities.push(vec![
            num(*x),
            num(lp.exp()),
            num(lq.exp()),
            num((lq + la_obrs).exp() / obrs_ref.z()),
            num((lq + la_drs).exp() / drs_ref.z()),
            num((lq + la_unb).exp() / unb_ref.z()),
        ]);
        acceptance.push(vec![
            num(*x),
            num(ln_r.exp()),
            num(la_unb.exp()),
            num(la_obrs.exp()),
            num(la_drs.exp()),
        ]);
    }

    let mut checks = Vec::new();
    if obrs.regime != BudgetRegime::Unbudgeted {
        checks.push(Check::at_most("obrs rate", (obrs_ref.z() - 1.0 / k).abs(), RATE_TOL));
    }
    checks.push(Check::at_most(
        "drs rate matches obrs",
        (drs_ref.z() - obrs_ref.z()).abs(),
        RATE_TOL,
    ));

    let mut out = OutDir::create(&args.out)?;
    out.csv(
        "fig2_densities.csv",
        &["x", "p", "p_hat", "p_tilde_obrs", "p_tilde_drs", "p_tilde_unbudgeted"],
        densities,
    )?;
    out.csv(
        "fig2_acceptance.csv",
        &["x", "ratio", "a_unbudgeted", "a_obrs", "a_drs"],
        acceptance,
    )?;

    let pr_results = if obrs.regime == BudgetRegime::Unbudgeted {
        // The transform only covers K <= M; past it the refined model is P.
        json!({ "skipped": format!("K = {k} exceeds M = {m}") })
    } else {
        let grid = default_lambda_grid(obrs.ln_scale());
        let report = verify_pr_transform(&pair, k, &grid)?;
        let base = pr_curve_pair(&pair, &grid)?;
        let drs_curve = pr_curve_pair(&drs_ref.target_pair(&pair)?, &grid)?;
        let rows = (0..grid.len()).map(|i| {
            vec![
                num(grid[i]),
                num(base.points[i].alpha),
                num(base.points[i].beta),
                num(report.direct.points[i].alpha),
                num(report.direct.points[i].beta),
                num(report.predicted.points[i].alpha),
                num(report.predicted.points[i].beta),
                num(drs_curve.points[i].alpha),
                num(drs_curve.points[i].beta),
            ]
        });
        out.csv(
            "fig2_pr_curves.csv",
            &[
                "lambda",
                "alpha_base",
                "beta_base",
                "alpha_obrs",
                "beta_obrs",
                "alpha_predicted",
                "beta_predicted",
                "alpha_drs",
                "beta_drs",
            ],
            rows,
        )?;
        checks.push(Check::at_most(
            "PR transform deviation",
            report.max_deviation(),
            TRANSFORM_TOL,
        ));
        let identity = report.max_identity_residual.max(base.max_identity_residual());
        checks.push(Check::at_most("PR identity residual", identity, IDENTITY_TOL));
        checks.push(Check::at_most(
            "precision loss",
            (-report.min_precision_gain).max(0.0),
            IDENTITY_TOL,
        ));
        json!({
            "max_deviation": report.max_deviation(),
            "max_identity_residual": identity,
            "min_precision_gain": report.min_precision_gain,
            "regime_boundary": report.regime_boundary,
            "points": report.n_points,
        })
    };

    Finish {
        command: "fig2",
        args,
        seed: None,
        out,
        start,
        results: json!({
            "k": k,
            "m": m,
            "c_k": obrs.c_k,
            "regime": obrs.regime,
            "gamma": drs.gamma,
            "rate_obrs": obrs_ref.z(),
            "rate_drs": drs_ref.z(),
            "rate_unbudgeted": unb_ref.z(),
            "obrs": obrs_spec,
            "drs": drs_spec,
            "unbudgeted_vs_obrs_c1": unb_vs_c_one,
            "pr": pr_results,
        }),
        checks,
    }
    .write()
}
