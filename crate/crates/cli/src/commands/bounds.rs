use std::time::Instant;

use obrs_core::oracle::{bounds_sweep, two_point_bound_rows, BoundKind, BoundRow};
use serde_json::json;

use super::Finish;
use crate::args::BoundsArgs;
use crate::error::{CliError, Result};
use crate::manifest::{Check, RunManifest};
use crate::output::{num, OutDir};

fn record(source: &str, r: &BoundRow) -> Vec<String> {
    let bound = match r.bound {
        BoundKind::General => "general",
        BoundKind::KlRenyi => "kl_renyi",
    };
    vec![
        source.into(),
        r.instance_seed.to_string(),
        bound.into(),
        r.generator.to_string(),
        num(r.k),
        num(r.m),
        num(r.lhs),
        num(r.rhs),
        num(r.slack),
        r.satisfied.to_string(),
        r.witness_feasible.to_string(),
    ]
}

pub fn run(args: &BoundsArgs) -> Result<RunManifest> {
    let start = Instant::now();
    if args.instances == 0 {
        return Err(CliError::Usage("need at least one instance".into()));
    }
    let sweep = bounds_sweep(args.instances, args.max_atoms, args.seed)?;
    let two_point = two_point_bound_rows()?;
    let kl_two_point = two_point
        .iter()
        .find(|r| r.bound == BoundKind::KlRenyi)
        .expect("the two-point rows include the KL bound");

    let rows = two_point
        .iter()
        .map(|r| record("two_point", r))
        .chain(sweep.rows.iter().map(|r| record("random", r)));
    let mut out = OutDir::create(&args.out)?;
    out.csv(
        "bounds.csv",
        &[
            "source",
            "instance_seed",
            "bound",
            "generator",
            "K",
            "M",
            "lhs",
            "rhs",
            "slack",
            "satisfied",
            "witness_feasible",
        ],
        rows,
    )?;
    out.json("bounds.json", &json!({ "two_point": two_point, "sweep": sweep }))?;

    Finish {
        command: "bounds",
        args,
        seed: Some(args.seed),
        out,
        start,
        results: json!({
            "instances": sweep.instances,
            "general_violations": sweep.general_violations,
            "kl_renyi_violations": sweep.kl_renyi_violations,
            "kl_renyi_violation_rate": sweep.kl_renyi_violation_rate,
            "two_point_kl_renyi": {
                "lhs": kl_two_point.lhs,
                "rhs": kl_two_point.rhs,
                "violated": !kl_two_point.satisfied,
            },
        }),
        checks: vec![Check::at_most(
            "general bound violations",
            sweep.general_violations as f64,
            0.0,
        )],
    }
    .write()
}
