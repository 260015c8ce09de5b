use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tritangle")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tritangle-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn csv_rows(out: &Output) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.records().map(|x| x.unwrap()).collect()
}

#[test]
fn compute_ghz() {
    let v = json(&run(&["compute", "--state", "ghz"]));
    assert!((v["tau"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!((v["three_tangle"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!(v["bounds"]["sigma_u"]["q_star"].is_number());
}

#[test]
fn compute_w_as_csv() {
    let out = run(&["compute", "--state", "w", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    let field = |name: &str| -> f64 { rows[0][header.iter().position(|h| *h == name).unwrap()].parse().unwrap() };
    assert_eq!(field("tau"), 0.0);
    assert!((field("c") - 0.6666667).abs() < 1e-7);
}

#[test]
fn compute_generalized_ghz_and_bad_names() {
    let v = json(&run(&["compute", "--state", "gghz:0.3"]));
    assert!((v["tau"].as_f64().unwrap() - 0.6f64.sin()).abs() < 1e-9);
    assert_eq!(code(&run(&["compute", "--state", "gghz:2.0"])), 2);
    assert_eq!(code(&run(&["compute", "--state", "gghz:abc"])), 2);
}

#[test]
fn missing_file_is_an_input_error() {
    let out = run(&["compute", "--state", "missing.json"]);
    assert_eq!(code(&out), 2);
    assert!(!out.stderr.is_empty());
    assert!(out.stdout.is_empty());
}

#[test]
fn state_files() {
    let good = scratch("good.json");
    std::fs::write(&good, r#"{"n": 2, "amplitudes": [[0.6,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0],[0,0.8]]}"#).unwrap();
    let v = json(&run(&["compute", "--state", good.to_str().unwrap()]));
    // 0.6|000> + 0.8i|111>: tau = 2 * 0.6 * 0.8.
    assert!((v["tau"].as_f64().unwrap() - 0.96).abs() < 1e-10);

    let short = scratch("short.json");
    std::fs::write(&short, r#"{"n": 2, "amplitudes": [[1,0]]}"#).unwrap();
    assert_eq!(code(&run(&["compute", "--state", short.to_str().unwrap()])), 2);

    let garbage = scratch("garbage.json");
    std::fs::write(&garbage, "not json").unwrap();
    assert_eq!(code(&run(&["compute", "--state", garbage.to_str().unwrap()])), 2);
}

#[test]
fn random_states_follow_the_seed() {
    let a = run(&["compute", "--state", "random", "--n", "3", "--seed", "5"]);
    let b = run(&["compute", "--state", "random", "--n", "3", "--seed", "5"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["n"], 3);
    let c = run(&["compute", "--state", "random", "--n", "3", "--seed", "6"]);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(code(&run(&["compute", "--state", "ghz", "--n", "4"])), 2);
}

#[test]
fn out_flag_writes_file() {
    let path = scratch("bound.json");
    let out = run(&["bound", "--state", "ghz", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["spectral"].as_f64().unwrap() <= v["tau"].as_f64().unwrap() + 1e-9);
    assert!((v["qubit_det_exact"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn simulate_ghz_is_accurate_and_reproducible() {
    let args = ["simulate", "--state", "ghz", "--shots", "1000000", "--seed", "1"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert!((v["tau_hat"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert_eq!(v["diagonal"].as_array().unwrap().len(), 2);
    assert!(v["residual_off_diagonal"].as_f64().unwrap() < 1e-4);
}

#[test]
fn simulate_product_reads_zero() {
    let v = json(&run(&["simulate", "--state", "product", "--shots", "100"]));
    assert_eq!(v["tau_hat"].as_f64().unwrap(), 0.0);
}

#[test]
fn simulate_with_search() {
    let v = json(&run(&["simulate", "--state", "random", "--seed", "3", "--shots", "1000", "--search"]));
    assert_eq!(v["search"]["converged"], true);
    assert_eq!(code(&run(&["simulate", "--shots", "0"])), 2);
}

#[test]
fn simulate_csv_lists_settings() {
    let out = run(&["simulate", "--state", "random", "--n", "3", "--shots", "500", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert_eq!(csv_rows(&out).len(), 6);
}

#[test]
fn noise_scan_rows_and_summary() {
    let out = run(&["noise-scan", "--state", "ghz", "--eps", "0,0.01,0.02,0.05", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows[0][3].parse::<f64>().unwrap().abs() < 1e-12);

    let v = json(&run(&["noise-scan", "--state", "ghz", "--eps", "0,0.01,0.02,0.05"]));
    let slope = v["slope"].as_f64().unwrap();
    assert!(slope.is_finite() && slope > 0.0);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn noise_scan_rejects_large_eps() {
    assert_eq!(code(&run(&["noise-scan", "--eps", "0.5"])), 2);
    assert_eq!(code(&run(&["noise-scan", "--eps", "-0.1"])), 2);
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = run(&["verify", "--seed", "42", "--trials", "500"]);
    let b = run(&["verify", "--seed", "42", "--trials", "500"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 5);
    assert!(text.contains("factor: 4.000000000000"));
}

#[test]
fn verify_json_reports_factor() {
    let v = json(&run(&["verify", "--trials", "10", "--format", "json"]));
    assert!((v["trace_factor"].as_f64().unwrap() - 4.0).abs() < 1e-9);
    assert_eq!(v["all_passed"], true);
}

#[test]
fn verify_catches_a_broken_kernel() {
    let out = run(&["verify", "--trials", "20", "--inject-kernel-bug"]);
    assert_eq!(code(&out), 1);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("FAIL") && l.contains("lemma")));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["compute", "--format", "xml"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}
