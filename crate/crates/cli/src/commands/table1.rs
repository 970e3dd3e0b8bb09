use std::time::Instant;

use obrs_core::fdiv::Generator;
use obrs_core::numeric::log_grid;
use serde_json::json;

use super::Finish;
use crate::args::Table1Args;
use crate::error::{CliError, Result};
use crate::manifest::{Check, RunManifest};
use crate::output::{num, opt, OutDir};

/// Residuals above this fail the smooth generators.
pub const ROUNDTRIP_TOL: f64 = 1e-12;

struct Row {
    u: f64,
    f: f64,
    f_prime: Option<f64>,
    t_opt: f64,
    fstar: Option<f64>,
    /// `|f(u) + f*(t) − u·t| / max(1, |u·t|)` at `t = f'(u)`.
    fenchel: Option<f64>,
    /// `|∇f*(t) − u| / u`.
    ratio: Option<f64>,
}

fn row(g: &Generator, u: f64) -> Result<Row> {
    let f = g.f_value(u)?;
    let t_opt = g.t_opt_from_ratio(u)?;
    if !g.is_smooth() {
        return Ok(Row {
            u,
            f,
            f_prime: None,
            t_opt,
            fstar: None,
            fenchel: None,
            ratio: None,
        });
    }
    let t = g.f_derivative(u)?;
    let fstar = g.fstar_value(t)?;
    let fenchel = (f + fstar - u * t).abs() / (u * t).abs().max(1.0);
    let ratio = (g.ratio_from_discriminator(t)? - u).abs() / u;
    Ok(Row {
        u,
        f,
        f_prime: Some(t),
        t_opt,
        fstar: Some(fstar),
        fenchel: Some(fenchel),
        ratio: Some(ratio),
    })
}

pub fn run(args: &Table1Args) -> Result<RunManifest> {
    let start = Instant::now();
    if !(args.u_min > 0.0 && args.u_max > args.u_min) || args.points < 2 {
        return Err(CliError::Usage("need 0 < u_min < u_max and at least two points".into()));
    }
    let mut gens = vec![
        Generator::Kl,
        Generator::ReverseKl,
        Generator::TotalVariation,
        Generator::Gan,
    ];
    for l in &args.pr_lambdas {
        gens.push(Generator::pr(*l)?);
    }
    let grid = log_grid(args.u_min, args.u_max, args.points);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut checks = Vec::new();
    for g in &gens {
        let table: Vec<Row> = grid.iter().map(|u| row(g, *u)).collect::<Result<_>>()?;
        let max_fenchel = table
            .iter()
            .filter_map(|r| r.fenchel)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        let max_ratio = table
            .iter()
            .filter_map(|r| r.ratio)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        if g.is_smooth() {
            let worst = max_fenchel.unwrap_or(0.0).max(max_ratio.unwrap_or(0.0));
            checks.push(Check::at_most(&format!("{g} round trip"), worst, ROUNDTRIP_TOL));
        }
        summary.push(vec![
            g.to_string(),
            num(g.f_value(1.0)?),
            opt(max_fenchel),
            opt(max_ratio),
            g.is_smooth().to_string(),
        ]);
        for r in table {
            rows.push(vec![
                g.to_string(),
                num(r.u),
                num(r.f),
                opt(r.f_prime),
                num(r.t_opt),
                opt(r.fstar),
                opt(r.fenchel),
                opt(r.ratio),
                g.is_smooth().to_string(),
            ]);
        }
    }
    let mut out = OutDir::create(&args.out)?;
    out.csv(
        "table1.csv",
        &[
            "generator",
            "u",
            "f",
            "f_prime",
            "t_opt",
            "fstar_at_f_prime",
            "fenchel_residual",
            "ratio_residual",
            "dual_supported",
        ],
        rows,
    )?;
    out.csv(
        "table1_summary.csv",
        &[
            "generator",
            "f_at_1",
            "max_fenchel_residual",
            "max_ratio_residual",
            "dual_supported",
        ],
        summary,
    )?;
    Finish {
        command: "table1",
        args,
        seed: None,
        out,
        start,
        results: json!({ "gan_f_at_1": Generator::Gan.f_value(1.0)? }),
        checks,
    }
    .write()
}
