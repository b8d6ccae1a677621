//! End-to-end checks of the installed binary: exit codes, output schemas,
//! and reproducibility of emitted files.

use std::path::Path;
use std::process::{Command, Output};

fn tetratomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tetratomo"))
        .args(args)
        .env_remove("TETRATOMO_OUT")
        .output()
        .expect("binary runs")
}

#[test]
fn help_exits_zero() {
    let out = tetratomo(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["povm", "simulate", "reconstruct", "region", "accuracy", "fit", "recipe"] {
        assert!(text.contains(sub), "help misses {sub}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(tetratomo(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        tetratomo(&["simulate", "--state", "aligned", "--events", "3", "--bogus"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn runtime_errors_exit_one() {
    let out = tetratomo(&["reconstruct", "--counts", "0,0,0,0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero total"));

    let out = tetratomo(&["simulate", "--state", "nonsense", "--events", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reconstruct_emits_json_stokes() {
    let out = tetratomo(&["reconstruct", "--counts", "3,1,1,1"]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["qubit_count"], 1);
    assert_eq!(body["physical"], true);
    let stokes = body["stokes"].as_array().unwrap();
    assert_eq!(stokes.len(), 4);
    assert!((stokes[1].as_f64().unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
}

#[test]
fn simulate_is_reproducible_and_shaped() {
    let args = ["simulate", "--state", "unpolarized", "--events", "100", "--seed", "5"];
    let first = tetratomo(&args);
    let second = tetratomo(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("event_index,outcome"));
    assert_eq!(lines.count(), 100);
}

#[test]
fn region_csv_has_grid_schema() {
    let out = tetratomo(&["region", "--counts", "20,0,0,0", "--grid-res", "16"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("longitude,latitude,log_likelihood,member")
    );
    assert_eq!(lines.count(), 16 * 16);
}

#[test]
fn exact_accuracy_warns_about_seed_and_fits() {
    let dir = tempfile::tempdir().unwrap();
    let curve_path = dir.path().join("curve.csv");
    let out = tetratomo(&[
        "accuracy",
        "exact",
        "--state",
        "unpolarized",
        "--nmax",
        "40",
        "--seed",
        "7",
        "--out",
        curve_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("ignored"));

    let fit_out = tetratomo(&[
        "fit",
        "--input",
        curve_path.to_str().unwrap(),
        "--nmin",
        "10",
        "--nmax",
        "40",
    ]);
    assert!(fit_out.status.success());
    let fit: serde_json::Value = serde_json::from_slice(&fit_out.stdout).unwrap();
    let c = fit["c"].as_f64().unwrap();
    assert!((c - 0.5).abs() < 0.05, "fit exponent {c}");
    assert_eq!(fit["n_min"], 10);
}

#[test]
fn accuracy_mc_supports_json_format() {
    let out = tetratomo(&[
        "accuracy", "mc", "--state", "aligned", "--events", "20", "--runs", "4", "--seed", "2",
        "--format", "json",
    ]);
    assert!(out.status.success());
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(body["method"], "monte_carlo");
    assert_eq!(body["points"].as_array().unwrap().len(), 20);
}

fn read_manifest(dir: &Path) -> serde_json::Value {
    let body = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&body).unwrap()
}

#[test]
fn converge_recipe_writes_files_and_manifest_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let out = tetratomo(&[
        "recipe",
        "converge",
        "--events",
        "50",
        "--seed",
        "3",
        "--grid-res",
        "16",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let estimates = std::fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    assert_eq!(estimates.lines().count(), 51); // header + one row per copy
    assert!(dir.path().join("region_n000050.csv").exists());

    let manifest = read_manifest(dir.path());
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for entry in files {
        let name = entry["path"].as_str().unwrap();
        let bytes = std::fs::read(dir.path().join(name)).unwrap();
        assert_eq!(entry["bytes"].as_u64().unwrap() as usize, bytes.len());
        let digest = format!("{:x}", <sha2::Sha256 as sha2::Digest>::digest(&bytes));
        assert_eq!(entry["sha256"].as_str().unwrap(), digest, "hash of {name}");
    }
    assert_eq!(manifest["config"]["recipe"], "converge");
    assert_eq!(manifest["seed"], 3);
}

#[test]
fn output_dir_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tetratomo"))
        .args(["recipe", "converge", "--events", "20", "--grid-res", "16"])
        .env("TETRATOMO_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("estimates.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn bell_state_is_rejected_by_one_qubit_recipes() {
    let dir = tempfile::tempdir().unwrap();
    let out = tetratomo(&[
        "recipe",
        "converge",
        "--state",
        "bell_psi_plus",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1-qubit"));
}
