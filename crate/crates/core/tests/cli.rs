//! End-to-end runs of the `ratedist` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ratedist"))
}

fn write_model(dir: &Path, name: &str, a: &[f64], sigma2: f64) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::json!({ "a": a, "sigma2": sigma2 }).to_string()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {v}"))
}

#[test]
fn point_on_unstable_first_order() {
    let dir = tempfile::tempdir().unwrap();
    let u = write_model(dir.path(), "u.json", &[1.0, -2.0], 1.0);
    let out = run(&["point", "--model", u.to_str().unwrap(), "--theta", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((num(&v, "distortion") - 1.0 / 3.0).abs() < 1e-10);
    assert!(num(&v, "rate_kolmogorov").abs() < 1e-12);
    assert!((num(&v, "rate_autoregressive") - 2f64.ln()).abs() < 1e-10);
    assert!((num(&v, "gap") - 2f64.ln()).abs() < 1e-10);
}

#[test]
fn point_by_distortion_inverts_theta() {
    let dir = tempfile::tempdir().unwrap();
    let u = write_model(dir.path(), "u.json", &[1.0, -2.0], 1.0);
    let out = run(&["point", "--model", u.to_str().unwrap(), "--distortion", "0.2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((num(&json(&out), "distortion") - 0.2).abs() < 1e-9);
}

#[test]
fn roots_of_wiener_model() {
    let dir = tempfile::tempdir().unwrap();
    let w = write_model(dir.path(), "wiener.json", &[1.0, -1.0], 1.0);
    let out = run(&["roots", "--model", w.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let roots = v["roots"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    assert!((num(&roots[0], "modulus") - 1.0).abs() < 1e-12);
    assert_eq!(num(&v, "log_correction"), 0.0);
}

#[test]
fn file_and_usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = run(&["curve", "--model", missing.to_str().unwrap(), "--points", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"a":[2,-1],"sigma2":1}"#).unwrap();
    assert_eq!(
        run(&["point", "--model", bad.to_str().unwrap(), "--theta", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["point", "--theta", "1"]).status.code(), Some(2));
    assert_eq!(
        run(&["curve", "--model", "x.json", "--points", "many"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn computation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let w = write_model(dir.path(), "white.json", &[1.0], 1.0);
    let out = run(&["point", "--model", w.to_str().unwrap(), "--distortion", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["eig", "--model", w.to_str().unwrap(), "--n", "100000"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bits_divide_rates_only() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(dir.path(), "m.json", &[1.0, -1.6, 0.9], 2.0);
    let m = m.to_str().unwrap();
    let nats = json(&run(&["point", "--model", m, "--theta", "0.7"]));
    let bits = json(&run(&["--rate-unit", "bits", "point", "--model", m, "--theta", "0.7"]));
    for key in [
        "rate_kolmogorov",
        "rate_autoregressive",
        "rate_hashimoto_arimoto",
        "gap",
    ] {
        let want = num(&nats, key) / std::f64::consts::LN_2;
        let got = num(&bits, key);
        assert!(
            (got - want).abs() <= f64::EPSILON * want.abs(),
            "{key}: {got} vs {want}"
        );
    }
    for key in ["theta", "distortion", "e_set_measure"] {
        assert_eq!(num(&nats, key), num(&bits, key), "{key}");
    }
}

#[test]
fn emitted_model_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let a = [1.0, -2.1, 1.94, -0.6, 0.05];
    let m = write_model(dir.path(), "m.json", &a, 1.5);
    let rebuilt = dir.path().join("rebuilt.json");
    let out = run(&[
        "roots",
        "--model",
        m.to_str().unwrap(),
        "--emit-model",
        rebuilt.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&rebuilt).unwrap()).unwrap();
    let back: Vec<f64> = v["a"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(back.len(), a.len());
    for (x, y) in back.iter().zip(&a) {
        assert!((x - y).abs() <= 1e-7, "{back:?}");
    }
    assert_eq!(num(&v, "sigma2"), 1.5);
}

#[test]
fn curve_csv_is_deterministic_and_written_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(dir.path(), "m.json", &[1.0, -2.5, 1.0], 1.0);
    let m = m.to_str().unwrap();
    let seq = dir.path().join("seq.csv");
    let par = dir.path().join("par.csv");
    for (path, extra) in [(&seq, None), (&par, Some("--parallel"))] {
        let mut args = vec![
            "--format",
            "csv",
            "--out",
            path.to_str().unwrap(),
            "curve",
            "--model",
            m,
            "--points",
            "24",
        ];
        args.extend(extra);
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let a = fs::read(&seq).unwrap();
    assert_eq!(a, fs::read(&par).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 25);
    assert!(text.starts_with("theta,distortion,"));
}

#[test]
fn verify_reports_checks() {
    let dir = tempfile::tempdir().unwrap();
    let u = write_model(dir.path(), "u.json", &[1.0, -2.0], 1.0);
    let u = u.to_str().unwrap();
    let out = run(&["verify", "gap", "--model", u]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(!v["checks"].as_array().unwrap().is_empty());

    let out = run(&["verify", "identity", "--model", u, "--n", "8,32", "--theta", "0.1,1,10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["checks"].as_array().unwrap().len(), 6);
}

#[test]
fn simulate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_model(dir.path(), "m.json", &[1.0, -0.5], 1.0);
    let m = m.to_str().unwrap();
    let a = run(&["simulate", "--model", m, "--n", "50", "--seed", "7"]);
    let b = run(&["simulate", "--model", m, "--n", "50", "--seed", "7"]);
    let c = run(&["simulate", "--model", m, "--n", "50", "--seed", "8"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v = json(&a);
    let noise = v["noise"].as_array().unwrap();
    let values = v["values"].as_array().unwrap();
    assert_eq!(values.len(), 50);
    for k in 1..50 {
        let want = noise[k].as_f64().unwrap() + 0.5 * values[k - 1].as_f64().unwrap();
        assert!((values[k].as_f64().unwrap() - want).abs() < 1e-12);
    }
}
