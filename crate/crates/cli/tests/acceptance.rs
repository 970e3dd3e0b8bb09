//! Acceptance suite. Runs every criterion in order, prints one line per
//! criterion, and fails at the end if any asserted criterion failed.
//!
//! Run alone with `cargo test -p obrs-cli --test acceptance`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use obrs_cli::args::{Budget, Command as Cli, Gaussians25Args};
use obrs_core::dist::{bimodal_pair, two_mode_target, MassPair, Quadrature};
use obrs_core::fdiv::Generator;
use obrs_core::landscape::{
    default_theta_grid, fit_grid, gaussian_fit_loss, landscape_1d, primal_identity_check, FitGrid, DEFAULT_BUDGETS,
};
use obrs_core::obrs::{refine_pair, solve_c_k_pair};
use obrs_core::oracle::{
    bounds_sweep, derive_seed, optimality_check, random_instance_up_to, two_point_bound_rows, BoundKind, Instance,
};
use obrs_core::prcurve::{default_lambda_grid, verify_pr_transform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240611;

struct Outcome {
    passed: bool,
    detail: String,
}

fn instances(n: usize, stream: u64) -> Vec<Instance> {
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(SEED + stream, i as u64));
            random_instance_up_to(32, &mut rng).unwrap()
        })
        .collect()
}

fn criterion(id: u32, name: &str, limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = body();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed <= l);
    let passed = outcome.passed && in_time;
    let budget = limit.map_or(String::new(), |l| format!(" < {:.0} s", l.as_secs_f64()));
    // Written to the handle directly so the lines survive libtest's capture.
    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "[{}] {id:>2} {name}: {} ({:.2} s{budget})",
        if passed { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
    )
    .unwrap();
    stdout.flush().unwrap();
    passed
}

fn c1_solver() -> Outcome {
    let two = Instance::two_point();
    let pair = two.pair();
    let sol = solve_c_k_pair(&pair, 2.0).unwrap();
    let refined = refine_pair(&pair, &sol.spec()).unwrap();
    let a = refined.acceptance();
    let t = refined.probs();
    let example = (sol.c_k - 1.5).abs() <= 1e-12
        && (a[0] - 0.375).abs() <= 1e-12
        && (a[1] - 1.0).abs() <= 1e-12
        && (t[0] - 0.6).abs() <= 1e-12
        && (t[1] - 0.4).abs() <= 1e-12;
    let worst = instances(200, 1)
        .iter()
        .map(|inst| {
            let sol = solve_c_k_pair(&inst.pair(), inst.k).unwrap();
            let z = refine_pair(&inst.pair(), &sol.spec()).unwrap().z();
            (z - 1.0 / inst.k).abs()
        })
        .fold(0.0, f64::max);
    Outcome {
        passed: example && worst <= 1e-9,
        detail: format!(
            "c_K = {}, a = {a:?}, p~ = {t:?}; max |rate - 1/K| = {worst:.1e} over 200 instances",
            sol.c_k
        ),
    }
}

fn c2_optimality() -> Outcome {
    let mut violations = 0;
    let mut min_gap = f64::INFINITY;
    for (i, inst) in instances(50, 2).iter().enumerate() {
        let report = optimality_check(
            &Generator::all_primal(),
            &inst.p,
            &inst.q,
            inst.k,
            1000,
            derive_seed(SEED, i as u64),
        )
        .unwrap();
        violations += report.violations();
        min_gap = report.verdicts.iter().map(|v| v.min_gap).fold(min_gap, f64::min);
    }
    Outcome {
        passed: violations == 0,
        detail: format!(
            "50 instances x 1000 trials x {{kl, rkl, tv, gan, pr:2}}: {violations} violations, min gap {min_gap:.2e}"
        ),
    }
}

fn c3_general_bound() -> Outcome {
    let sweep = bounds_sweep(200, 32, SEED).unwrap();
    let witness_ok = sweep
        .rows
        .iter()
        .filter(|r| r.bound == BoundKind::General)
        .all(|r| r.witness_feasible);
    Outcome {
        passed: sweep.general_violations == 0 && witness_ok,
        detail: format!(
            "{} violations over 200 instances, witnesses feasible: {witness_ok}",
            sweep.general_violations
        ),
    }
}

fn c4_kl_renyi() -> Outcome {
    let rows = two_point_bound_rows().unwrap();
    let kl = rows.iter().find(|r| r.bound == BoundKind::KlRenyi).unwrap();
    let sweep = bounds_sweep(200, 32, SEED).unwrap();
    let flagged = !kl.satisfied && (kl.lhs - 0.0204).abs() < 1e-4 && (kl.rhs - 0.0141).abs() < 1e-4;
    Outcome {
        passed: flagged,
        detail: format!(
            "two-point lhs {:.4} > rhs {:.4} flagged: {flagged}; random violation rate {:.3} (reported only)",
            kl.lhs, kl.rhs, sweep.kl_renyi_violation_rate
        ),
    }
}

fn c5_pr_transform() -> Outcome {
    let mut finite_dev: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for inst in instances(50, 5) {
        let pair = inst.pair();
        let sol = solve_c_k_pair(&pair, inst.k).unwrap();
        let r = verify_pr_transform(&pair, inst.k, &default_lambda_grid(sol.ln_scale())).unwrap();
        finite_dev = finite_dev.max(r.max_deviation());
        identity = identity.max(r.max_identity_residual);
    }
    let (p, q) = bimodal_pair();
    let pair = MassPair::from_quadrature(&p, &q, &Quadrature::default()).unwrap();
    let sol = solve_c_k_pair(&pair, 2.0).unwrap();
    let r = verify_pr_transform(&pair, 2.0, &default_lambda_grid(sol.ln_scale())).unwrap();
    identity = identity.max(r.max_identity_residual);
    Outcome {
        passed: finite_dev <= 1e-10 && r.max_deviation() <= 1e-4 && identity <= 1e-10,
        detail: format!(
            "finite max deviation {finite_dev:.1e}, 1D pair {:.1e}, max |alpha - lambda beta| {identity:.1e}",
            r.max_deviation()
        ),
    }
}

fn c6_primal_identity() -> Outcome {
    let worst = instances(100, 6)
        .iter()
        .flat_map(|inst| {
            [Generator::Kl, Generator::Gan].map(|g| primal_identity_check(&g, &inst.p, &inst.q, inst.k).unwrap())
        })
        .fold(0.0, f64::max);
    Outcome {
        passed: worst <= 1e-10,
        detail: format!("max deviation {worst:.1e} over 100 instances x {{kl, gan}}"),
    }
}

fn c7_landscape() -> Outcome {
    let s = landscape_1d(
        &default_theta_grid(),
        &DEFAULT_BUDGETS,
        &Generator::Gan,
        &Quadrature::default(),
    )
    .unwrap();
    let v = s.monotonicity_violation();
    Outcome {
        passed: v <= 1e-8,
        detail: format!(
            "max increase along K {v:.1e}; local minima for K = {:?}: {:?}",
            s.budgets,
            s.local_minima()
        ),
    }
}

fn c8_mass_covering() -> Outcome {
    let target = two_mode_target();
    let (grid, quad) = (FitGrid::default(), Quadrature::default());
    let one = fit_grid(&Generator::Gan, &target, &grid, 1.0, &quad).unwrap();
    let two = fit_grid(&Generator::Gan, &target, &grid, 2.0, &quad).unwrap();
    // The K=1 argmin refined with K=2, the other reading of the comparison.
    let cross = gaussian_fit_loss(&Generator::Gan, &target, one.mu, one.sigma, 2.0, &quad).unwrap();
    Outcome {
        passed: two.sigma > one.sigma && two.loss < one.loss && two.loss < cross,
        detail: format!(
            "K=1 argmin ({}, {}) loss {:.4}; K=2 argmin ({}, {}) loss {:.4}; K=1 argmin refined at K=2 {:.4}",
            one.mu, one.sigma, one.loss, two.mu, two.sigma, two.loss, cross
        ),
    }
}

fn c9_gaussians25(out: &Path) -> Outcome {
    let args = Gaussians25Args {
        out: out.to_path_buf(),
        seed: SEED,
        budget: Budget::default(),
        samples: 2500,
        repeats: 50,
        target_std: 0.05,
        proposal_std: 0.10,
        spacing: 1.0,
        jitter: 0.2,
        calibration_samples: 100_000,
        radius_stds: 4.0,
    };
    let m = obrs_cli::execute(&Cli::Gaussians25(args)).unwrap();
    let methods = m.results["methods"].as_array().unwrap();
    let get = |name: &str, key: &str| {
        methods.iter().find(|v| v["method"] == name).unwrap()[key]
            .as_f64()
            .unwrap()
    };
    let [base, obrs, drs] = ["baseline", "obrs", "drs"].map(|n| get(n, "precision_mean"));
    let recall = ["baseline", "obrs", "drs"]
        .iter()
        .all(|n| get(n, "recall_mean") == 1.0 && get(n, "recall_std") == 0.0);
    let inv = 1.0 / m.results["target_rate"].as_f64().unwrap();
    let rate_err = ["obrs", "drs"].map(|n| (get(n, "proposals_per_accepted") - inv).abs() / inv);
    let rate_ok = rate_err.iter().all(|e| *e <= 0.05);
    Outcome {
        passed: obrs >= drs && drs >= base && recall && rate_ok,
        detail: format!(
            "precision obrs {obrs:.4} >= drs {drs:.4} >= baseline {base:.4}; recall 1.0: {recall}; proposals/accepted off by {:.2}% / {:.2}%",
            100.0 * rate_err[0],
            100.0 * rate_err[1]
        ),
    }
}

fn obrs(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_obrs")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "obrs {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.extension()
                .is_some_and(|e| e == "csv" || p.file_name().unwrap() == "bounds.json")
        })
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn c10_determinism(root: &Path) -> Outcome {
    let p = root.join("p.json");
    let q = root.join("q.json");
    fs::write(
        &p,
        r#"{"type": "gaussian_mixture", "weights": [0.5, 0.5], "means": [[-1.5], [1.5]], "stds": [[0.5], [0.5]]}"#,
    )
    .unwrap();
    fs::write(
        &q,
        r#"{"type": "gaussian_mixture", "weights": [1.0], "means": [[0.0]], "stds": [[1.5]]}"#,
    )
    .unwrap();
    let (p, q) = (p.to_str().unwrap(), q.to_str().unwrap());
    let runs: [(&str, Vec<&str>); 3] = [
        ("bounds", vec!["bounds", "--seed", "5", "--instances", "40"]),
        (
            "gaussians25",
            vec!["gaussians25", "--seed", "5", "--repeats", "5", "--samples", "500"],
        ),
        (
            "sample",
            vec![
                "sample",
                "--target",
                p,
                "--proposal",
                q,
                "--budget",
                "2",
                "--mode",
                "mc",
                "--n",
                "2000",
                "--seed",
                "5",
            ],
        ),
    ];
    let mut same = Vec::new();
    for (name, args) in runs {
        let a = root.join(format!("{name}-a"));
        let b = root.join(format!("{name}-b"));
        let c = root.join(format!("{name}-replay"));
        let mut first = args.clone();
        first.extend(["--out", a.to_str().unwrap()]);
        obrs(&first);
        let mut second = args.clone();
        second.extend(["--out", b.to_str().unwrap()]);
        obrs(&second);
        let manifest = obrs_cli::commands::manifest_path(&a, name);
        obrs(&["replay", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
        let reference = csvs(&a);
        same.push((
            name,
            !reference.is_empty() && reference == csvs(&b) && reference == csvs(&c),
        ));
    }
    Outcome {
        passed: same.iter().all(|(_, s)| *s),
        detail: format!("identical outputs on rerun and replay: {same:?}"),
    }
}

fn scratch() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("obrs-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn acceptance_criteria() {
    let root = scratch();
    let s = Duration::from_secs;
    let results = [
        criterion(1, "c_K solver", Some(s(1)), c1_solver),
        criterion(2, "optimality against random acceptances", Some(s(30)), c2_optimality),
        criterion(3, "general improvement bound", Some(s(10)), c3_general_bound),
        criterion(4, "KL-Renyi bound (report)", None, c4_kl_renyi),
        criterion(5, "PR curve transform", Some(s(30)), c5_pr_transform),
        criterion(6, "primal loss identity", Some(s(5)), c6_primal_identity),
        criterion(7, "landscape monotone in K", None, c7_landscape),
        criterion(8, "two-mode fit covers mass at K=2", Some(s(120)), c8_mass_covering),
        criterion(9, "25-Gaussians precision ordering", Some(s(120)), || {
            c9_gaussians25(&root.join("g25"))
        }),
        criterion(10, "determinism", None, || c10_determinism(&root)),
    ];
    let _ = fs::remove_dir_all(&root);
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, p)| !**p)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
