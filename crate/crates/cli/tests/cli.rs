use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 5
trials = 2
snr_db = [0.0]
covariance_estimation_draws = 200

[scenario]
target_angle_deg = 3.0
snapshots = 16
interferers = [{ angle_deg = 30.0, inr_db = 20.0 }]
transmit = { elements = 3 }
receive = { elements = 3 }

[mismatch]
model = "ricean"
power_factor = 0.05
paths = 10
halfwidth_deg = 2.5

[[methods]]
kind = "smi"

[[methods]]
kind = "lsmi"
loading = 10.0

[[methods]]
kind = "prob_gaussian"
p = 0.9
eta1 = 0.93
"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mimo-rab"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn with_config() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--config", "nowhere.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.toml"));
}

#[test]
fn unknown_method_is_rejected() {
    let dir = with_config();
    let out = run(dir.path(), &["--config", "small.toml", "--methods", "SMI,Bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Bogus"));
}

#[test]
fn malformed_snr_range_is_rejected() {
    let dir = with_config();
    let out = run(dir.path(), &["--config", "small.toml", "--snr", "0:10"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn snr_override_and_method_filter_shape_the_table() {
    let dir = with_config();
    let out = run(
        dir.path(),
        &["--config", "small.toml", "--snr", "0:30:10", "--methods", "smi,LSMI", "--out", "r.csv", "--jobs", "1"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "snr_db,method,mean_sinr_db,stderr_db,trials_ok,trials_failed");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    let snrs: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(snrs, vec![0.0, 10.0, 20.0, 30.0, 0.0, 10.0, 20.0, 30.0]);
    assert!(rows.iter().all(|r| r[1] == "SMI" || r[1] == "LSMI"));
    assert!(rows.iter().all(|r| r[4] == "2" && r[5] == "0"));

    let manifest = std::fs::read_to_string(dir.path().join("r.manifest.toml")).unwrap();
    assert!(manifest.contains("csv_hash"));
    assert!(manifest.contains("[config]"));
}

#[test]
fn seed_override_changes_results() {
    let dir = with_config();
    let a = run(dir.path(), &["--config", "small.toml", "--methods", "SMI", "--out", "a.csv"]);
    let b = run(dir.path(), &["--config", "small.toml", "--methods", "SMI", "--out", "b.csv", "--seed", "6"]);
    assert!(a.status.success() && b.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn bound_demo_prints_certificates() {
    let dir = with_config();
    let out = run(dir.path(), &["--config", "small.toml", "--bound-demo"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ProbGaussian"));
    assert!(text.contains("transmit: lower bound"));
    assert!(text.contains("receive: lower bound"));
    assert!(!dir.path().join("results.csv").exists());
}
