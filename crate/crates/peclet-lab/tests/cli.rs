use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peclet-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const SWEEP: &str = r#"{
  "profile": "sin",
  "grid": { "n": 64, "auto_refine": false },
  "nu": [2e-2, 1e-2],
  "k": [1, 2],
  "seed": 3
}"#;

fn run_sweep(dir: &Path, cfg: &str, out: &str, workers: &str) -> (String, String) {
    let o = lab(&[
        "sweep-decay",
        "--config",
        cfg,
        "--out",
        out,
        "--workers",
        workers,
        "--no-timestamp",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = dir.join(out);
    (
        fs::read_to_string(d.join("results.csv")).unwrap(),
        fs::read_to_string(d.join("summary.json")).unwrap(),
    )
}

#[test]
fn same_seed_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sweep.json", SWEEP);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let first = run_sweep(tmp.path(), &cfg, a.to_str().unwrap(), "1");
    let second = run_sweep(tmp.path(), &cfg, b.to_str().unwrap(), "1");
    assert_eq!(first, second);
    assert!(first
        .0
        .starts_with("# experiment: sweep-decay\n# config_sha256: "));
    assert_eq!(first.0.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn worker_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sweep.json", SWEEP);
    let one = run_sweep(
        tmp.path(),
        &cfg,
        tmp.path().join("w1").to_str().unwrap(),
        "1",
    );
    let two = run_sweep(
        tmp.path(),
        &cfg,
        tmp.path().join("w2").to_str().unwrap(),
        "2",
    );
    assert_eq!(one, two);
}

#[test]
fn missing_profile_exits_two_and_names_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", r#"{ "nu": [1e-2], "k": [1] }"#);
    let o = lab(&[
        "sweep-decay",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"profile\""));
}

#[test]
fn unknown_profile_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{ "profile": "tanh", "nu": [1e-2], "k": [1] }"#,
    );
    let o = lab(&[
        "pseudospec",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ledger_violation_exits_three_with_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    // nu/|k| far above kappa0, so the weights cannot be built
    let cfg = write_config(
        tmp.path(),
        "hypo.json",
        r#"{ "profile": "sin", "grid": { "n": 64 }, "nu": [0.5], "k": [1] }"#,
    );
    let out = tmp.path().join("o");
    let o = lab(&[
        "hypo-verify",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["error"].is_string());
    assert!(out.join("results.csv").exists());
}

#[test]
fn oracle_check_passes_on_small_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "oracle.json", r#"{ "grid": { "n": 64 } }"#);
    let out = tmp.path().join("o");
    let o = lab(&[
        "oracle-check",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    assert!(summary["max_rel_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn hypo_verify_writes_certificate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "hypo.json",
        r#"{
  "profile": "sin",
  "grid": { "n": 128 },
  "nu": [2e-3],
  "k": [1],
  "hypo": { "eps_tilde": 0.1, "c0": 4.0, "kappa0": 0.01, "orders": 7, "t_final": 5, "dt": 0.05, "samples": 2 }
}"#,
    );
    let out = tmp.path().join("o");
    let o = lab(&[
        "hypo-verify",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert.as_array().unwrap().len(), 2);
    assert!(cert[0]["phi"].as_array().unwrap().len() > 10);
}

#[test]
fn command_line_overrides_replace_lists() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sweep.json", SWEEP);
    let out = tmp.path().join("o");
    let o = lab(&[
        "pseudospec",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--nu",
        "0.05",
        "--k",
        "-1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("5e-2,-1,"));
}
