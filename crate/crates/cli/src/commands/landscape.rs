use std::time::Instant;

use obrs_core::landscape::landscape_1d_with;
use obrs_core::numeric::linear_grid;
use serde_json::json;

use super::Finish;
use crate::args::LandscapeArgs;
use crate::error::{CliError, Result};
use crate::manifest::{Check, RunManifest};
use crate::output::{num, OutDir};

pub const MONOTONE_TOL: f64 = 1e-8;

pub fn run(args: &LandscapeArgs) -> Result<RunManifest> {
    let start = Instant::now();
    if args.theta_points < 3 || !(args.theta_min > 0.0 && args.theta_max > args.theta_min) {
        return Err(CliError::Usage(
            "need 0 < theta_min < theta_max and at least three points".into(),
        ));
    }
    let thetas = linear_grid(args.theta_min, args.theta_max, args.theta_points);
    let quad = args.quad.quadrature();
    let surface = landscape_1d_with(&thetas, &args.budgets, &args.generator, &quad, args.target_spacing)?;

    let rows = surface.thetas.iter().zip(&surface.losses).flat_map(|(theta, row)| {
        surface
            .budgets
            .iter()
            .zip(row)
            .map(move |(k, loss)| vec![num(*theta), num(*k), num(*loss)])
    });
    let mut out = OutDir::create(&args.out)?;
    out.csv("landscape.csv", &["theta", "K", "loss"], rows)?;

    let violation = surface.monotonicity_violation();
    let columns: Vec<_> = surface
        .budgets
        .iter()
        .enumerate()
        .map(|(b, k)| {
            let i = surface.argmin(b);
            json!({
                "K": k,
                "local_minima": surface.local_minima()[b],
                "argmin_theta": surface.thetas[i],
                "min_loss": surface.losses[i][b],
            })
        })
        .collect();
    Finish {
        command: "landscape",
        args,
        seed: None,
        out,
        start,
        results: json!({
            "generator": surface.generator,
            "quadrature": surface.quadrature,
            "family": {
                "components": 10,
                "target_variance": obrs_core::dist::TEN_MODE_TARGET_VAR,
                "model_variance": obrs_core::dist::TEN_MODE_MODEL_VAR,
                "target_spacing": surface.target_spacing,
            },
            "monotonicity_violation": violation,
            "columns": columns,
        }),
        checks: vec![Check::at_most("loss nonincreasing in K", violation, MONOTONE_TOL)],
    }
    .write()
}
