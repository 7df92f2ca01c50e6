use std::path::{Path, PathBuf};

use nuio::benchmark::{ACTUATOR_PRESET, SENSOR_PRESET};
use nuio::cli::{run, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
use nuio::config::{ProblemConfig, SynthesisArtifact};

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn nuio(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("nuio").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn synthesized(dir: &Path, preset: &str) -> PathBuf {
    let path = dir.join("result.json");
    let r = nuio(&["synthesize", preset, "-o", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    path
}

fn write_config(dir: &Path, cfg: &ProblemConfig) -> PathBuf {
    let path = dir.join("problem.toml");
    std::fs::write(&path, cfg.to_toml_string().unwrap()).unwrap();
    path
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(nuio(&["--help"]).code, EXIT_OK);
    assert!(nuio(&["--help"]).out.contains("synthesize"));
    assert_eq!(nuio(&[]).code, EXIT_USAGE);
    assert_eq!(nuio(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(nuio(&["verify"]).code, EXIT_USAGE);
}

#[test]
fn synthesize_prints_the_summary_and_writes_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let r = nuio(&["synthesize", ACTUATOR_PRESET, "-o", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert!(r.out.contains("Optimal"), "{}", r.out);
    assert!(r.out.contains("L2 bound = sqrt(2·ρ★)"));
    assert!(r.out.contains("rho*"));
    let art = SynthesisArtifact::load(&path).unwrap();
    assert_eq!(art.source.as_deref(), Some(ACTUATOR_PRESET));
    let rho = art.result.rho.unwrap();
    assert!((rho - 0.1232).abs() < 2e-3, "{rho}");
}

#[test]
fn synthesize_overrides_reach_the_program() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let p = path.to_str().unwrap();
    let r = nuio(&["synthesize", SENSOR_PRESET, "-o", p, "--r", "2", "--epsilon", "0.01", "--mode", "iss_only"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let art = SynthesisArtifact::load(&path).unwrap();
    assert_eq!(art.problem.fault_model.r, 2);
    assert_eq!(art.result.p.nrows(), 6);
    assert_eq!(art.result.epsilon, 0.01);
    assert_eq!(art.result.rho, None);
    assert!(r.out.contains("n/a"));
    assert_eq!(nuio(&["synthesize", SENSOR_PRESET, "-o", p, "--mode", "fastest"]).code, EXIT_USAGE);
    assert_eq!(nuio(&["synthesize", SENSOR_PRESET, "-o", p, "--r", "0"]).code, EXIT_USAGE);
}

#[test]
fn infeasible_configs_exit_with_two_and_a_hint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ProblemConfig::preset(SENSOR_PRESET, 1).unwrap();
    cfg.plant.fy = nalgebra::DMatrix::identity(2, 2);
    cfg.plant.fx = nalgebra::DMatrix::zeros(4, 2);
    cfg.scenario = None;
    let path = write_config(dir.path(), &cfg);
    let out = dir.path().join("never.json");
    let r = nuio(&["synthesize", path.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_INFEASIBLE, "{}", r.err);
    assert!(r.err.contains("hint"), "{}", r.err);
    assert!(r.err.contains("rank(Fy)"), "{}", r.err);
    assert!(!out.exists());
}

#[test]
fn broken_configs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ProblemConfig::preset(SENSOR_PRESET, 1).unwrap();
    let text = cfg.to_toml_string().unwrap();
    let start = text.find("\nB = ").unwrap();
    let end = start + 1 + text[start + 1..].find('\n').unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, format!("{}{}", &text[..start], &text[end..])).unwrap();
    let r = nuio(&["synthesize", path.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.err.contains("`B`"), "{}", r.err);
    let r = nuio(&["synthesize", "/nonexistent.toml"]);
    assert_eq!(r.code, EXIT_USAGE);
    assert_eq!(nuio(&["synthesize", "benchmark:robot-arm:elbow"]).code, EXIT_USAGE);
}

#[test]
fn simulate_writes_the_full_trace() {
    let dir = tempfile::tempdir().unwrap();
    let art = synthesized(dir.path(), SENSOR_PRESET);
    let csv = dir.path().join("trace.csv");
    let plots = dir.path().join("plots");
    let r = nuio(&[
        "simulate",
        art.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--plot-data",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 60_002);
    assert!(text.starts_with("t,x1,x2,x3,x4,y1,y2,u1,f1,fhat1,e_norm\n"));
    assert!(r.out.contains("60001 rows"));
    assert!(plots.join("fault1_actual.dat").exists());
    assert!(plots.join("fault1_estimate.dat").exists());
}

#[test]
fn simulate_to_stdout_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let art = synthesized(dir.path(), ACTUATOR_PRESET);
    let a = art.to_str().unwrap();
    let r = nuio(&["simulate", a, "--tf", "0.5", "--dt", "0.5"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    assert_eq!(r.out.lines().count(), 3);
    let r = nuio(&["simulate", a, "--tf", "1", "--dt", "0.1", "--scenario", SENSOR_PRESET]);
    assert_eq!(r.code, EXIT_OK, "{}", r.err);
    // The sensor ramp starts at 25 s, so the fault column is zero here.
    assert!(r.out.lines().skip(1).all(|l| l.split(',').nth(8) == Some("0.00000000000000e0")));
    assert_eq!(nuio(&["simulate", a, "--dt", "-1"]).code, EXIT_USAGE);
}

#[test]
fn corrupted_artifacts_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let art = synthesized(dir.path(), SENSOR_PRESET);
    let text = std::fs::read_to_string(&art).unwrap();
    std::fs::write(&art, &text[..text.len() / 3]).unwrap();
    let a = art.to_str().unwrap();
    let r = nuio(&["simulate", a]);
    assert_eq!(r.code, EXIT_USAGE);
    assert!(r.err.contains("result.json"), "{}", r.err);
    assert_eq!(nuio(&["verify", a]).code, EXIT_USAGE);
    assert_eq!(nuio(&["verify", "/nonexistent.json"]).code, EXIT_USAGE);
}

#[test]
fn verify_reports_each_check() {
    let dir = tempfile::tempdir().unwrap();
    let art = synthesized(dir.path(), ACTUATOR_PRESET);
    let r = nuio(&["verify", art.to_str().unwrap(), "--samples", "5000", "--seed", "3"]);
    assert_eq!(r.code, EXIT_OK, "{}{}", r.out, r.err);
    assert_eq!(r.out.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{}", r.out);
    assert!(r.out.contains("recomputed blocks"));
    assert!(r.out.contains("seed 3"), "{}", r.out);
    assert_eq!(nuio(&["verify", art.to_str().unwrap(), "--samples", "0"]).code, EXIT_USAGE);
}

#[test]
fn tampered_gains_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = synthesized(dir.path(), ACTUATOR_PRESET);
    let mut art = SynthesisArtifact::load(&path).unwrap();
    art.result.q[(0, 0)] += 1.0;
    std::fs::write(&path, art.to_json().unwrap()).unwrap();
    let r = nuio(&["verify", path.to_str().unwrap(), "--samples", "1000"]);
    assert_eq!(r.code, EXIT_VERIFY, "{}", r.out);
    assert!(r.out.lines().any(|l| l.starts_with("FAIL")));
}

#[test]
fn benchmark_runs_both_cases() {
    let dir = tempfile::tempdir().unwrap();
    let r = nuio(&["benchmark", "--samples", "2000", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK, "{}{}", r.out, r.err);
    assert!(r.out.contains(SENSOR_PRESET) && r.out.contains(ACTUATOR_PRESET));
    assert_eq!(r.out.lines().filter(|l| l.trim_start().starts_with("PASS")).count(), 6, "{}", r.out);
    for stem in ["benchmark_robot-arm_sensor", "benchmark_robot-arm_actuator"] {
        assert!(dir.path().join(format!("{stem}.json")).exists());
        assert!(dir.path().join(format!("{stem}.csv")).exists());
        assert!(dir.path().join(stem).join("fault1_estimate.dat").exists());
    }
    assert_eq!(nuio(&["benchmark", "--samples", "0"]).code, EXIT_USAGE);
}

#[test]
fn the_binary_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_nuio");
    let out = dir.path().join("a.json");
    let status = std::process::Command::new(bin)
        .args(["synthesize", SENSOR_PRESET, "-o", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_OK));
    let status = std::process::Command::new(bin).arg("verify").output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
}
