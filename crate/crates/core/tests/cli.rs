use std::path::Path;
use std::process::{Command, Output};

fn polysob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polysob")).args(args).output().expect("binary runs")
}

fn json(out: &[u8]) -> serde_json::Value {
    serde_json::from_slice(out).expect("valid JSON")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn constants_for_6_2() {
    let out = polysob(&["constants", "--n", "6", "--k", "2"]);
    assert!(out.status.success());
    let v = json(&out.stdout);
    assert_eq!(v["two_star"], 6);
    assert_eq!(v["a_nk"], "384^{-1/2}");
    assert_eq!(v["c_nk"], "1/3");
    // 1/K(6,2) = (32/5 · √384 · π³)^{2/3}
    let level = (32.0 / 5.0 * 384f64.sqrt() * std::f64::consts::PI.powi(3)).powf(2.0 / 3.0);
    assert!((v["K"].as_f64().unwrap() * level - 1.0).abs() < 1e-14);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn invalid_pair_is_a_usage_error() {
    let out = polysob(&["constants", "--n", "4", "--k", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 <= 2k < n"));
    assert_eq!(polysob(&["constants", "--n", "6", "--k", "2", "--bogus"]).status.code(), Some(1));
}

#[test]
fn green_grid_contract() {
    let out = polysob(&["green", "--n", "5", "--k", "2", "--r-grid", "0.01:10:200"]);
    assert!(out.status.success());
    let mut rd = csv::Reader::from_reader(&out.stdout[..]);
    assert_eq!(rd.headers().unwrap(), vec!["r", "gamma", "r_pow_singular_scaled", "envelope_bound"]);
    let r: Vec<f64> = rd.records().map(|rec| rec.unwrap()[0].parse().unwrap()).collect();
    assert_eq!(r.len(), 200);
    assert!(r.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn precision_env_is_honored() {
    let run = |digits: &str| {
        Command::new(env!("CARGO_BIN_EXE_polysob"))
            .args(["green", "--n", "5", "--k", "2", "--r-grid", "0.01:1:3"])
            .env("POLYSOB_PRECISION", digits)
            .output()
            .unwrap()
    };
    assert!(run("20").status.success());
    assert_eq!(run("99").status.code(), Some(1));
}

#[test]
fn flat_torus_slope_is_zero_and_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.json",
        r#"{"manifold":{"kind":"torus","n":8},"n":8,"k":2,"B":0,
            "eps_grid":{"start":0.003,"stop":0.0003,"count":8}}"#,
    );
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    let out = polysob(&["quotient-slope", "--config", &cfg, "--out", csv_a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out.stdout);
    let (slope, err) = (v["slope"].as_f64().unwrap(), v["slope_err"].as_f64().unwrap());
    assert!(slope.abs() < 2.0 * err, "slope {slope} ± {err}");
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    let again = polysob(&["quotient-slope", "--config", &cfg, "--out", csv_b.to_str().unwrap(), "--jobs", "2"]);
    assert!(again.status.success());
    assert_eq!(std::fs::read(&csv_a).unwrap(), std::fs::read(&csv_b).unwrap());
    assert_eq!(v["config_hash"], json(&again.stdout)["config_hash"]);
    let header = std::fs::read_to_string(&csv_a).unwrap();
    assert!(header.starts_with("eps,theta_eps,Q,err\n"));
}

#[test]
fn failed_expectation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "probe.json",
        r#"{"manifold":{"kind":"torus","n":6},"n":6,"k":2,"B":1,"expect_violation":true}"#,
    );
    let out = polysob(&["probe-iopt", "--config", &cfg, "--out", dir.path().join("p.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out.stdout)["violated"], false);
}

#[test]
fn bad_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write_config(dir.path(), "typo.json", r#"{"manifold":{"kind":"torus","n":6},"n":6,"k":2,"Bee":1}"#);
    assert_eq!(polysob(&["quotient-slope", "--config", &typo]).status.code(), Some(1));
    let mismatch = write_config(dir.path(), "dim.json", r#"{"manifold":{"kind":"torus","n":7},"n":6,"k":2}"#);
    assert_eq!(polysob(&["quotient-slope", "--config", &mismatch]).status.code(), Some(1));
    assert_eq!(polysob(&["quotient-slope", "--config", "/nonexistent.json"]).status.code(), Some(1));
}

#[test]
fn identities_single_pair() {
    let out = polysob(&["identities", "--n", "7", "--k", "3"]);
    assert!(out.status.success());
    let v = json(&out.stdout);
    assert_eq!(v["all_zero"], true);
    assert_eq!(v["certificates"].as_array().unwrap().len(), 3);
}
