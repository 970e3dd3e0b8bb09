use std::time::Instant;

use obrs_core::dist::GaussianMixture;
use obrs_core::landscape::{fit_grid, gaussian_fit_loss, FitGrid, FitResult};
use serde_json::json;

use super::Finish;
use crate::args::FitArgs;
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::output::{num, OutDir};

/// Comparison of the fits at the two smallest budgets.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BudgetComparison {
    pub k_low: f64,
    pub k_high: f64,
    pub sigma_low: f64,
    pub sigma_high: f64,
    /// Loss of each budget at its own argmin.
    pub loss_low: f64,
    pub loss_high: f64,
    /// Loss of the low-budget argmin when refined with the high budget.
    pub loss_low_argmin_at_high: f64,
    pub sigma_widens: bool,
    pub refined_loss_lower: bool,
}

pub fn run(args: &FitArgs) -> Result<RunManifest> {
    let start = Instant::now();
    if args.budgets.is_empty() {
        return Err(CliError::Usage("no budgets given".into()));
    }
    let grid = FitGrid {
        mu_lo: args.mu_min,
        mu_hi: args.mu_max,
        mu_n: args.mu_points,
        sigma_lo: args.sigma_min,
        sigma_hi: args.sigma_max,
        sigma_n: args.sigma_points,
    };
    let quad = args.quad.quadrature();
    let target = GaussianMixture::equal_1d(&[-args.target_mode, args.target_mode], args.target_std)?;
    let fits: Vec<FitResult> = args
        .budgets
        .iter()
        .map(|k| fit_grid(&args.generator, &target, &grid, *k, &quad))
        .collect::<obrs_core::Result<_>>()?;

    let (mus, sigmas) = (grid.mus(), grid.sigmas());
    let mut rows = Vec::new();
    for fit in &fits {
        for (i, mu) in mus.iter().enumerate() {
            for (j, sigma) in sigmas.iter().enumerate() {
                rows.push(vec![num(*mu), num(*sigma), num(fit.k), num(fit.loss_at(i, j))]);
            }
        }
    }
    let summary = fits.iter().map(|f| {
        vec![
            num(f.k),
            num(f.mu),
            num(f.sigma),
            num(f.loss),
            f.index.0.to_string(),
            f.index.1.to_string(),
        ]
    });
    let mut out = OutDir::create(&args.out)?;
    out.csv("fit.csv", &["mu", "sigma", "K", "loss"], rows)?;
    out.csv(
        "fit_summary.csv",
        &["K", "mu", "sigma", "loss", "mu_index", "sigma_index"],
        summary,
    )?;

    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|a, b| fits[*a].k.total_cmp(&fits[*b].k));
    let comparison = match order.as_slice() {
        [lo, hi, ..] => {
            let (lo, hi) = (&fits[*lo], &fits[*hi]);
            let cross = gaussian_fit_loss(&args.generator, &target, lo.mu, lo.sigma, hi.k, &quad)?;
            Some(BudgetComparison {
                k_low: lo.k,
                k_high: hi.k,
                sigma_low: lo.sigma,
                sigma_high: hi.sigma,
                loss_low: lo.loss,
                loss_high: hi.loss,
                loss_low_argmin_at_high: cross,
                sigma_widens: hi.sigma > lo.sigma,
                refined_loss_lower: hi.loss < lo.loss,
            })
        }
        _ => None,
    };
    let best: Vec<_> = fits
        .iter()
        .map(|f| json!({ "K": f.k, "mu": f.mu, "sigma": f.sigma, "loss": f.loss, "index": f.index }))
        .collect();
    Finish {
        command: "fit",
        args,
        seed: None,
        out,
        start,
        results: json!({
            "generator": args.generator,
            "grid": grid,
            "quadrature": quad,
            "target": { "modes": [-args.target_mode, args.target_mode], "std": args.target_std },
            "fits": best,
            "comparison": comparison,
        }),
        checks: Vec::new(),
    }
    .write()
}
