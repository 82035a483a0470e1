//! End-to-end tests against the built binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn randcomp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randcomp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).trim().to_string()
}

#[test]
fn bounds_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = randcomp(dir.path(), &["bounds", "--mode", "single", "--x", "4", "--a", "4", "--eps", "0.05"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "694");

    let out = randcomp(dir.path(), &["bounds", "--mode", "exact", "--h", "2", "--xa", "2"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "5");

    let out = randcomp(dir.path(), &["bounds", "--mode", "crossover", "--h", "2", "--m", "1", "--xa", "1"]);
    assert!(out.status.success());
    let eps: f64 = stdout(&out).parse().unwrap();
    assert!((eps - 0.41628).abs() < 1e-4);
}

#[test]
fn bounds_missing_flag_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = randcomp(dir.path(), &["bounds", "--mode", "single", "--a", "4", "--eps", "0.05"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_figure_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = randcomp(
        dir.path(),
        &["bounds", "--mode", "single", "--csv", "fig.csv", "--figure", "cardinality", "--eps", "0.05", "--xs", "2,8,32"],
    );
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("fig.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x,bell_approx,bell_exact,triangle_approx,triangle_exact"
    );
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((first[1] - 415.8883083359672).abs() < 1e-6);
    assert!(dir.path().join("fig.manifest.json").exists());
}

#[test]
fn scenario_matching_xor_writes_spec_and_target() {
    let dir = tempfile::tempdir().unwrap();
    let out = randcomp(
        dir.path(),
        &["scenario", "--name", "matching-xor", "--x", "3", "--out", "net.json", "--target", "target.csv"],
    );
    assert!(out.status.success());
    let spec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("net.json")).unwrap()).unwrap();
    let sources = spec["sources"].as_array().unwrap();
    assert_eq!(sources.len(), 1);
    assert_eq!(sources[0]["pmf"].as_array().unwrap().len(), 4);
    let target = fs::read_to_string(dir.path().join("target.csv")).unwrap();
    assert!(target.starts_with("x,a,p\n"));
    assert!(dir.path().join("net.manifest.json").exists());
}

#[test]
fn scenario_missing_x_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = randcomp(dir.path(), &["scenario", "--name", "matching-xor", "--out", "net.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rerun_reproduces_byte_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = randcomp(
        dir.path(),
        &["scenario", "--name", "correlated", "--h", "2", "--q", "uniform:2", "--out", "net.json", "--target", "target.csv"],
    );
    assert!(out.status.success());
    let spec = fs::read(dir.path().join("net.json")).unwrap();
    let target = fs::read(dir.path().join("target.csv")).unwrap();
    let manifest = fs::read(dir.path().join("net.manifest.json")).unwrap();

    let out = randcomp(dir.path(), &["rerun", "--manifest", "net.manifest.json"]);
    assert!(out.status.success());
    assert_eq!(fs::read(dir.path().join("net.json")).unwrap(), spec);
    assert_eq!(fs::read(dir.path().join("target.csv")).unwrap(), target);
    assert_eq!(fs::read(dir.path().join("net.manifest.json")).unwrap(), manifest);
}

fn write_xor_net(dir: &Path) {
    let out = randcomp(dir, &["scenario", "--name", "matching-xor", "--x", "3", "--out", "net.json"]);
    assert!(out.status.success());
}

#[test]
fn compress_succeeds_and_reports_deviation() {
    let dir = tempfile::tempdir().unwrap();
    write_xor_net(dir.path());
    let out = randcomp(
        dir.path(),
        &["compress", "--net", "net.json", "--source", "bits", "--eps", "0.15", "--seed", "7", "--out", "comp.json"],
    );
    assert!(out.status.success());
    let reports: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("comp.report.json")).unwrap())
            .unwrap();
    let deviation = reports[0]["achieved_deviation"].as_f64().unwrap();
    assert!(deviation < 0.15);
    assert!(dir.path().join("comp.manifest.json").exists());
}

#[test]
fn compress_loose_epsilon_first_attempt() {
    let dir = tempfile::tempdir().unwrap();
    write_xor_net(dir.path());
    // n below the support size forces actual resampling.
    let out = randcomp(
        dir.path(),
        &["compress", "--net", "net.json", "--source", "bits", "--eps", "1.1", "--seed", "7", "--n", "1", "--out", "comp.json"],
    );
    assert!(out.status.success());
    let reports: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("comp.report.json")).unwrap())
            .unwrap();
    assert_eq!(reports[0]["attempts_used"].as_u64(), Some(1));
}

#[test]
fn compress_bad_source_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write_xor_net(dir.path());
    let out = randcomp(
        dir.path(),
        &["compress", "--net", "net.json", "--source", "nope", "--eps", "0.15", "--out", "comp.json"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compress_jobs_flag_preserves_output() {
    let dir = tempfile::tempdir().unwrap();
    write_xor_net(dir.path());
    let base = &["compress", "--net", "net.json", "--source", "bits", "--eps", "0.6", "--seed", "3", "--n", "2", "--out", "a.json"];
    assert!(randcomp(dir.path(), base).status.success());
    let single = &["compress", "--net", "net.json", "--source", "bits", "--eps", "0.6", "--seed", "3", "--n", "2", "--jobs", "1", "--out", "b.json"];
    assert!(randcomp(dir.path(), single).status.success());
    assert_eq!(
        fs::read(dir.path().join("a.json")).unwrap(),
        fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn verify_lower_correlated_m2_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = randcomp(
        dir.path(),
        &["verify-lower", "--builtin", "correlated", "--q", "uniform:3", "--h", "2", "--m", "2"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout(&out), "INFEASIBLE");
}

#[test]
fn verify_lower_correlated_m3_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let out = randcomp(
        dir.path(),
        &["verify-lower", "--builtin", "correlated", "--q", "uniform:3", "--h", "2", "--m", "3", "--out", "real.json"],
    );
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("FEASIBLE"));
    let realization: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("real.json")).unwrap()).unwrap();
    assert_eq!(realization["source_pmf"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_lower_csv_target() {
    let dir = tempfile::tempdir().unwrap();
    // The maximally correlated coin as a CSV target.
    fs::write(
        dir.path().join("target.csv"),
        "x,a,p\n0,0,0.5\n0,1,0\n0,2,0\n0,3,0.5\n",
    )
    .unwrap();
    let out = randcomp(
        dir.path(),
        &["verify-lower", "--target", "target.csv", "--alphabets", "1x2,1x2", "--m", "2"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("FEASIBLE"));
}

#[test]
fn verify_lower_cap_env_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_randcomp"))
        .current_dir(dir.path())
        .env("RANDCOMP_SEARCH_CAP", "10")
        .args(["verify-lower", "--builtin", "correlated", "--q", "uniform:3", "--h", "2", "--m", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_lower_min_cardinality() {
    let dir = tempfile::tempdir().unwrap();
    let out = randcomp(
        dir.path(),
        &["verify-lower", "--builtin", "correlated", "--q", "uniform:3", "--h", "2", "--min", "--m-max", "4"],
    );
    assert!(out.status.success());
    assert_eq!(stdout(&out), "3");
}
