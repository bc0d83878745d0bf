use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn spheig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spheig")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spheig-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn quarter_plane_exponent_is_two() {
    let v = json(&spheig(&["exponent", "--p", "2", "--alpha", "pi/2"]));
    assert!((v["beta"].as_f64().unwrap() - 2.0).abs() < 1e-8);
    assert_eq!(v["beta_bracket"]["inner"].as_array().unwrap().len(), 4);
}

#[test]
fn half_plane_regular_branch_gives_minus_one() {
    let v = json(&spheig(&["exponent", "--p", "3", "--alpha", "pi", "--branch", "regular"]));
    assert!((v["beta"].as_f64().unwrap() + 1.0).abs() < 1e-8, "{v}");
}

#[test]
fn hemisphere_exponent_matches_the_linear_function() {
    let v = json(&spheig(&["exponent", "--p", "1.5", "--domain", "cap", "--alpha", "pi/2", "--branch", "regular", "--steps", "0"]));
    assert!((v["beta"].as_f64().unwrap() + 1.0).abs() < 1e-7, "{v}");
}

#[test]
fn exponent_csv_has_one_row() {
    let out = spheig(&["exponent", "--p", "2.5", "--alpha", "pi/2", "--format", "csv", "--steps", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 2);
}

#[test]
fn sweep_recovers_the_linear_exponents() {
    let out = spheig(&["sweep", "--p", "2", "--alpha", "pi/4,pi/2,pi", "--format", "csv", "--no-timing"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let betas: Vec<f64> = reader.records().map(|r| r.unwrap()[4].parse().unwrap()).collect();
    for (b, want) in betas.iter().zip([4.0, 2.0, 1.0]) {
        assert!((b - want).abs() < 1e-8, "{betas:?}");
    }
}

#[test]
fn empty_sweep_prints_only_the_header() {
    let out = spheig(&["sweep", "--p", "3:0.5:2", "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn sweep_without_timing_is_reproducible_and_plots() {
    let svg = scratch("sweep.svg");
    let args = ["sweep", "--p", "1.5:0.5:3", "--alpha", "pi/2,pi", "--no-timing", "--svg", svg.to_str().unwrap()];
    let (a, b) = (spheig(&args), spheig(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let plot = std::fs::read_to_string(&svg).unwrap();
    assert!(plot.starts_with("<svg") && plot.matches("<polyline").count() == 2);
}

#[test]
fn right_angle_cone_passes_its_diagnostics() {
    let out_file = scratch("cone.json");
    let out = spheig(&["cone", "--p", "2", "--alpha", "pi/2", "--n-theta", "16", "--out", out_file.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    let fit = v["decay"]["beta_fit"].as_f64().unwrap();
    assert!((fit - 2.0).abs() / 2.0 <= 0.02, "{fit}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{stderr}");
}

#[test]
fn short_cone_is_a_configuration_error() {
    let out = spheig(&["cone", "--p", "2", "--alpha", "pi/2", "--b", "2", "--n-theta", "8"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "ConfigError");
}

#[test]
fn invalid_exponent_parameters_exit_with_code_two() {
    let out = spheig(&["exponent", "--p", "0.5", "--alpha", "pi/2"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "InvalidParams");
}

#[test]
fn verify_is_deterministic_for_a_seed() {
    let args = ["verify", "--seed", "7", "--trials", "2000", "--format", "json"];
    let (a, b) = (spheig(&args), spheig(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let checks = json(&a)["checks"].as_array().unwrap().clone();
    let names: std::collections::BTreeSet<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names.len(), 9);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn verify_runs_a_single_check() {
    let out = spheig(&["verify", "--only", "vector-inequality", "--trials", "100000"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("vector-inequality"));
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn thread_cap_is_honored_and_validated() {
    let one = Command::new(env!("CARGO_BIN_EXE_spheig"))
        .env("SPHEIG_THREADS", "1")
        .args(["sweep", "--p", "2", "--alpha", "pi/2", "--no-timing", "--format", "csv"])
        .output()
        .unwrap();
    assert!(one.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_spheig"))
        .env("SPHEIG_THREADS", "zero")
        .args(["verify", "--trials", "10"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn vertex_lists_and_domain_specs_agree() {
    let list = scratch("square.txt");
    std::fs::write(&list, "# directions need not be unit vectors\n0.3 -0.3 0.9\n0.3 0.3 0.9\n-0.3 0.3 0.9\n-0.3 -0.3 0.9\n").unwrap();
    let spec = scratch("square.toml");
    std::fs::write(&spec, "kind = \"polygon\"\nvertices = [[0.3, -0.3, 0.9], [0.3, 0.3, 0.9], [-0.3, 0.3, 0.9], [-0.3, -0.3, 0.9]]\n").unwrap();
    let beta = |path: &PathBuf| {
        json(&spheig(&["exponent", "--p", "2", "--domain", "polygon", "--vertices-file", path.to_str().unwrap(), "--steps", "0"]))["beta"]
            .as_f64()
            .unwrap()
    };
    let (a, b) = (beta(&list), beta(&spec));
    assert_eq!(a, b);
    // beta(beta - 1) is close to the flat square eigenvalue 2 pi^2 / side^2
    let side = 2.0 * (1.0f64 / 3.0).atan();
    let flat = 2.0 * std::f64::consts::PI.powi(2) / (side * side);
    assert!((a * (a - 1.0) / flat - 1.0).abs() < 0.05, "{a}");
}
