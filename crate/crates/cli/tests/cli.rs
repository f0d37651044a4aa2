use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pohozaev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pohozaev")).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_profile(path: &Path, f: impl Fn(f64) -> f64) {
    let n = 400;
    let r_max = 12.0;
    let mut text = String::from("r,u,du\n");
    for i in 0..=n {
        let r = r_max * i as f64 / n as f64;
        text.push_str(&format!("{r:e},{:e},0\n", f(r)));
    }
    fs::write(path, text).unwrap();
}

const SUBCRITICAL: [&str; 8] = ["--N", "3", "--p", "2", "--q1", "2.5", "--q2", "4"];

#[test]
fn solve_writes_record_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["solve"];
    args.extend(SUBCRITICAL);
    args.extend(["--mu", "10", "--grid-n", "600", "--morse", "--mfg", "1", "--out", out.to_str().unwrap()]);
    let res = pohozaev(&args);
    assert!(res.status.success(), "{}", stderr(&res));

    let record = read_json(&out.join("record.json"));
    assert_eq!(record["branch"], "plus");
    assert_eq!(record["morse_index"], 1);
    assert!(record["energy"].as_f64().unwrap() < 0.0);
    assert!(record["residuals"]["mass"].as_f64().unwrap() < 1e-10);

    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "finished");
    assert_eq!(manifest["input_hash"].as_str().unwrap().len(), 64);
    for name in ["profile.csv", "morse.json", "mfg.csv", "mfg.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let mfg = fs::read_to_string(out.join("mfg.csv")).unwrap();
    assert!(mfg.starts_with("r,m,v,dv,residual_hjb\n"));
}

#[test]
fn solve_rejects_bad_regime_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let res = pohozaev(&[
        "solve", "--N", "3", "--p", "2", "--q1", "2", "--q2", "4", "--mu", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("q1 must exceed p"), "{}", stderr(&res));
}

#[test]
fn degenerate_branch_below_threshold_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["solve"];
    args.extend(SUBCRITICAL);
    args.extend(["--mu", "10", "--branch", "zero", "--grid-n", "600", "--out", out.to_str().unwrap()]);
    let res = pohozaev(&args);
    assert_eq!(res.status.code(), Some(2));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["error"].as_str().unwrap().contains("empty"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let res = pohozaev(&["solve", "--bogus"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn classify_reports_fiber_cases() {
    let dir = tempfile::tempdir().unwrap();
    let gaussian = dir.path().join("gaussian.csv");
    write_profile(&gaussian, |r| (-r * r / 2.0).exp());

    let mut args = vec!["classify", "--profile", gaussian.to_str().unwrap()];
    args.extend(SUBCRITICAL);
    let small: Vec<&str> = args.iter().copied().chain(["--mu", "1e-3"]).collect();
    let res = pohozaev(&small);
    assert!(res.status.success(), "{}", stderr(&res));
    let report: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(report["case"], "TwoRoots");
    assert!(report["t_plus"].as_f64().unwrap() < report["t_minus"].as_f64().unwrap());

    let bubble = dir.path().join("bubble.csv");
    write_profile(&bubble, |r| (1.0 + r * r).powf(-1.5));
    let mut args = vec!["classify", "--profile", bubble.to_str().unwrap()];
    args.extend(SUBCRITICAL);
    args.extend(["--mu", "1e8"]);
    let res = pohozaev(&args);
    assert!(res.status.success(), "{}", stderr(&res));
    let report: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(report["case"], "NoRoots");
}

#[test]
fn classify_missing_profile_is_a_usage_error() {
    let mut args = vec!["classify", "--profile", "/nonexistent/profile.csv"];
    args.extend(SUBCRITICAL);
    args.extend(["--mu", "1"]);
    assert_eq!(pohozaev(&args).status.code(), Some(1));
}

#[test]
fn sweep_writes_points_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(
        &cfg,
        "# two masses, two couplings\nN = 3\np = 2\nq1 = 2.5\nq2 = 4\na = 1, 1.2\nmu_frac = 0.1, 0.3\ngrid_n = 400\n",
    )
    .unwrap();
    let out = dir.path().join("sweep");
    let args = ["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", "2"];
    let res = pohozaev(&args);
    assert!(res.status.success(), "{}", stderr(&res));

    let csv = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[0], i.to_string());
        assert_eq!(row[12], "ok");
    }
    // Within one mass, the ground energy decreases as the coupling grows.
    for pair in rows.chunks(2) {
        let m0: f64 = pair[0][8].parse().unwrap();
        let m1: f64 = pair[1][8].parse().unwrap();
        assert!(m1 < m0, "{m1} !< {m0}");
    }

    let hashes = |out: &Path| -> Vec<String> {
        (0..4)
            .map(|i| {
                let m = read_json(&out.join(format!("point-{i:04}")).join("manifest.json"));
                assert_eq!(m["status"], "finished");
                m["input_hash"].as_str().unwrap().to_string()
            })
            .collect()
    };
    let first = hashes(&out);

    let rerun = dir.path().join("rerun");
    let args2 = ["sweep", "--config", cfg.to_str().unwrap(), "--out", rerun.to_str().unwrap(), "--jobs", "1"];
    assert!(pohozaev(&args2).status.success());
    assert_eq!(first, hashes(&rerun));
    assert_eq!(csv, fs::read_to_string(rerun.join("aggregate.csv")).unwrap());

    // Resume skips finished points and leaves their files untouched.
    let before = fs::metadata(out.join("point-0000/result.json")).unwrap().modified().unwrap();
    let resumed = pohozaev(&[args.as_slice(), &["--resume"]].concat());
    assert!(resumed.status.success());
    let after = fs::metadata(out.join("point-0000/result.json")).unwrap().modified().unwrap();
    assert_eq!(before, after);
    assert_eq!(csv, fs::read_to_string(out.join("aggregate.csv")).unwrap());
}

#[test]
fn sweep_rejects_malformed_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "N = 3\np = 2\nq1 = 2.5\nq2 = 4\nmu = 1\nmu_frac = 0.5\n").unwrap();
    let out = dir.path().join("sweep");
    let res = pohozaev(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn certify_requires_critical_exponent() {
    let res = pohozaev(&["certify", "--N", "3", "--p", "2", "--q1", "3", "--q2", "5", "--mu-frac", "0.3"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr(&res).contains("q2 = p*"), "{}", stderr(&res));
}

#[test]
fn certify_produces_positive_margin() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert");
    let res = pohozaev(&[
        "certify", "--N", "3", "--p", "2", "--q1", "3", "--q2", "6", "--mu-frac", "0.3", "--grid-n", "1000",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let doc: Value = serde_json::from_slice(&res.stdout).unwrap();
    let cert = &doc["certificate"];
    assert!(cert["margin"].as_f64().unwrap() > 0.0);
    let bound = doc["bound"].as_f64().unwrap();
    assert!(cert["sup"].as_f64().unwrap() < bound);
    assert_eq!(read_json(&out.join("manifest.json"))["status"], "finished");
    assert_eq!(read_json(&out.join("certificate.json")), doc);
}
