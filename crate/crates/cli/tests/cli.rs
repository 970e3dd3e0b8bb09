use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn obrs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_obrs")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = obrs(args);
    assert!(
        out.status.success(),
        "obrs {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("obrs-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn manifest(dir: &Path, command: &str) -> Value {
    let text = fs::read_to_string(dir.join(format!("{command}_manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn schema() -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/run_manifest.schema.json");
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn write_pair(dir: &Path) -> (String, String) {
    let p = dir.join("p.json");
    let q = dir.join("q.json");
    fs::write(&p, r#"{"type": "finite", "weights": [0.5, 0.5]}"#).unwrap();
    fs::write(&q, r#"{"type": "finite", "weights": [0.8, 0.2]}"#).unwrap();
    (p.display().to_string(), q.display().to_string())
}

#[test]
fn every_manifest_matches_the_schema() {
    let dir = scratch("schema");
    let d = |s: &str| dir.join(s).display().to_string();
    let (p, q) = write_pair(&dir);
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("table1", vec!["table1".into(), "--points".into(), "11".into()]),
        ("fig2", vec!["fig2".into()]),
        (
            "landscape",
            vec![
                "landscape".into(),
                "--theta-points".into(),
                "21".into(),
                "--nodes".into(),
                "1024".into(),
            ],
        ),
        (
            "fit",
            ["fit", "--mu-points", "7", "--sigma-points", "5", "--nodes", "1024"]
                .map(String::from)
                .to_vec(),
        ),
        (
            "bounds",
            ["bounds", "--seed", "3", "--instances", "10"]
                .map(String::from)
                .to_vec(),
        ),
        (
            "gaussians25",
            ["gaussians25", "--seed", "3", "--repeats", "2", "--samples", "250"]
                .map(String::from)
                .to_vec(),
        ),
        (
            "solve",
            vec![
                "solve".into(),
                "--target".into(),
                p.clone(),
                "--proposal".into(),
                q.clone(),
                "--rate".into(),
                "0.5".into(),
            ],
        ),
        (
            "sample",
            [
                "sample",
                "--target",
                &p,
                "--proposal",
                &q,
                "--budget",
                "2",
                "--n",
                "50",
                "--seed",
                "1",
            ]
            .map(String::from)
            .to_vec(),
        ),
    ];
    let validator = schema();
    for (name, mut args) in runs {
        args.extend(["--out".into(), d(name)]);
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&args);
        let m = manifest(&dir.join(name), name);
        let errors: Vec<String> = validator.iter_errors(&m).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
        assert_eq!(m["command"], name);
        for out in m["outputs"].as_array().unwrap() {
            let path = PathBuf::from(out.as_str().unwrap());
            assert!(path.exists(), "{name}: missing {}", path.display());
            if path.extension().unwrap() == "csv" {
                let (header, rows) = csv_rows(&path);
                assert!(!header.is_empty() && !rows.is_empty(), "{}", path.display());
                assert!(rows.iter().all(|r| r.len() == header.len()));
            }
        }
    }
    let mut bad = manifest(&dir.join("bounds"), "bounds");
    bad["seed"] = Value::Null;
    assert!(!validator.is_valid(&bad));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn table1_reports_the_generators() {
    let dir = scratch("table1");
    ok(&["table1", "--out", dir.to_str().unwrap()]);
    let (header, rows) = csv_rows(&dir.join("table1_summary.csv"));
    assert_eq!(header[0], "generator");
    let gan = rows.iter().find(|r| r[0] == "gan").unwrap();
    assert!((gan[1].parse::<f64>().unwrap() + 1.3862944).abs() < 1e-7);
    for g in ["kl", "gan"] {
        let row = rows.iter().find(|r| r[0] == g).unwrap();
        assert!(row[2].parse::<f64>().unwrap() <= 1e-12);
        assert!(row[3].parse::<f64>().unwrap() <= 1e-12);
    }
    for row in rows.iter().filter(|r| r[0].starts_with("pr:")) {
        assert_eq!(row[4], "false");
        assert_eq!(row[2], "");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn fig2_defaults_accept_half() {
    let dir = scratch("fig2");
    ok(&["fig2", "--out", dir.to_str().unwrap()]);
    let m = manifest(&dir, "fig2");
    assert!((m["results"]["rate_obrs"].as_f64().unwrap() - 0.5).abs() <= 1e-3);
    assert_eq!(m["results"]["unbudgeted_vs_obrs_c1"].as_f64().unwrap(), 0.0);
    assert!(m["results"]["pr"]["max_deviation"].as_f64().unwrap() <= 1e-4);
    let (header, rows) = csv_rows(&dir.join("fig2_pr_curves.csv"));
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    // At matched recall the refined curve has at least the base precision.
    for r in &rows {
        let f = |c: &str| r[col(c)].parse::<f64>().unwrap();
        assert!(f("alpha_obrs") >= f("alpha_base") - 1e-12);
    }
    // Same refined law for DRS at the matched rate.
    for r in &rows {
        assert!(
            (r[col("alpha_drs")].parse::<f64>().unwrap() - r[col("alpha_obrs")].parse::<f64>().unwrap()).abs() < 1e-12
        );
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn rate_flag_matches_budget_flag() {
    let dir = scratch("rate");
    let a = dir.join("a");
    let b = dir.join("b");
    ok(&["fig2", "--budget", "2", "--out", a.to_str().unwrap()]);
    ok(&["fig2", "--rate", "0.5", "--out", b.to_str().unwrap()]);
    for f in ["fig2_densities.csv", "fig2_acceptance.csv", "fig2_pr_curves.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn bounds_flags_the_two_point_instance() {
    let dir = scratch("bounds");
    ok(&[
        "bounds",
        "--seed",
        "11",
        "--instances",
        "30",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let m = manifest(&dir, "bounds");
    assert_eq!(m["results"]["general_violations"], 0);
    let tp = &m["results"]["two_point_kl_renyi"];
    assert_eq!(tp["violated"], true);
    assert!((tp["lhs"].as_f64().unwrap() - 0.0204).abs() < 1e-4);
    let (_, rows) = csv_rows(&dir.join("bounds.csv"));
    assert_eq!(rows.iter().filter(|r| r[0] == "two_point").count(), 6);
    assert_eq!(rows.iter().filter(|r| r[0] == "random").count(), 30 * 6);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn solve_then_sample() {
    let dir = scratch("sample");
    let (p, q) = write_pair(&dir);
    let s = dir.join("s");
    ok(&[
        "solve",
        "--target",
        &p,
        "--proposal",
        &q,
        "--budget",
        "2",
        "--out",
        s.to_str().unwrap(),
    ]);
    let spec: Value = serde_json::from_str(&fs::read_to_string(s.join("acceptance.json")).unwrap()).unwrap();
    assert_eq!(spec["kind"], "obrs");
    assert!((spec["c_K"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    let acc = s.join("acceptance.json");
    let run = dir.join("run");
    ok(&[
        "sample",
        "--target",
        &p,
        "--proposal",
        &q,
        "--acceptance",
        acc.to_str().unwrap(),
        "--n",
        "20000",
        "--seed",
        "9",
        "--out",
        run.to_str().unwrap(),
    ]);
    let m = manifest(&run, "sample");
    for key in ["seed", "n_target", "draws_used", "measured_rate"] {
        assert!(!m["results"][key].is_null(), "{key}");
    }
    assert!((m["results"]["measured_rate"].as_f64().unwrap() - 0.5).abs() < 0.02);
    let (header, rows) = csv_rows(&run.join("samples.csv"));
    assert_eq!(header, ["atom"]);
    let first = rows.iter().filter(|r| r[0] == "0").count() as f64 / rows.len() as f64;
    assert!((first - 0.6).abs() < 0.02, "{first}");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn exit_codes() {
    let dir = scratch("exit");
    let (p, q) = write_pair(&dir);
    let o = dir.to_str().unwrap();
    assert_eq!(
        obrs(&["fig2", "--budget", "2", "--rate", "0.5", "--out", o])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(obrs(&["bounds", "--out", o]).status.code(), Some(2));
    assert_eq!(obrs(&["fig2", "--budget", "0.5", "--out", o]).status.code(), Some(2));
    assert_eq!(obrs(&["landscape", "--gen", "js", "--out", o]).status.code(), Some(2));
    assert_eq!(
        obrs(&[
            "sample",
            "--target",
            &p,
            "--proposal",
            &q,
            "--n",
            "5",
            "--seed",
            "1",
            "--out",
            o
        ])
        .status
        .code(),
        Some(2)
    );
    let exhausted = obrs(&[
        "sample",
        "--target",
        &p,
        "--proposal",
        &q,
        "--budget",
        "2",
        "--n",
        "10",
        "--seed",
        "1",
        "--max-draws",
        "10",
        "--out",
        o,
    ]);
    assert_eq!(exhausted.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&exhausted.stderr).contains("exhausted"));
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn same_seed_same_bytes() {
    let dir = scratch("seed");
    let run = |name: &str, seed: &str| {
        let out = dir.join(name);
        ok(&[
            "gaussians25",
            "--seed",
            seed,
            "--repeats",
            "3",
            "--samples",
            "300",
            "--out",
            out.to_str().unwrap(),
        ]);
        fs::read(out.join("gaussians25.csv")).unwrap()
    };
    let a = run("a", "4");
    assert_eq!(a, run("b", "4"));
    assert_ne!(a, run("c", "5"));
    let _ = fs::remove_dir_all(&dir);
}
