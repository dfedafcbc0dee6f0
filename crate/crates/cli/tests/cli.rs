use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn kolmo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kolmo")).args(args).output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn verify_geometry_passes_and_records_sample_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = kolmo(&["verify", "geometry", "--seed", "42", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["passed"], true);
    assert_eq!(r["config"]["samples"], 100_000);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    let csv = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert!(csv.starts_with("experiment,trial,seed,p,q,d,grid,value,stderr"));
}

#[test]
fn missing_seed_is_a_usage_error() {
    for cmd in [["verify", "geometry"], ["run", "hormander"]] {
        let o = kolmo(&cmd);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("--seed"));
    }
}

#[test]
fn same_seed_gives_identical_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["verify", "geometry", "--seed", "7", "--n", "20000", "--out", out];
    assert_eq!(kolmo(&args).status.code(), Some(0));
    let first = std::fs::read(dir.path().join("report.json")).unwrap();
    assert_eq!(kolmo(&args).status.code(), Some(0));
    assert_eq!(first, std::fs::read(dir.path().join("report.json")).unwrap());
}

#[test]
fn corrupted_gamma1_fails_the_kernel_suite_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let o = kolmo(&["verify", "kernel", "--seed", "3", "--inject-fault", "gamma1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma1 matches finite differences"), "{}", stderr(&o));
    let r = report(dir.path());
    let failed: Vec<&Value> = r["report"]["criteria"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert_eq!(failed.len(), 1);
}

#[test]
fn fault_injection_is_rejected_elsewhere() {
    let o = kolmo(&["verify", "geometry", "--seed", "3", "--inject-fault", "gamma1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_suites_reject_other_dimensions() {
    let o = kolmo(&["verify", "geometry", "--seed", "1", "--d", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn coarse_weak11_grid_exits_with_sizing_advice() {
    let dir = tempfile::tempdir().unwrap();
    let o = kolmo(&["run", "weak11", "--seed", "1", "--grid", "64,64,64", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("refine by at least 4"), "{}", stderr(&o));
}

#[test]
fn unknown_tolerance_and_bad_values_are_usage_errors() {
    assert_eq!(kolmo(&["run", "hormander", "--seed", "1", "--tol", "foo=1"]).status.code(), Some(2));
    assert_eq!(kolmo(&["run", "hormander", "--seed", "x"]).status.code(), Some(2));
    assert_eq!(kolmo(&["run", "regularity", "--seed", "1", "--p", "2"]).status.code(), Some(2));
    assert_eq!(kolmo(&["run", "averaging", "--seed", "1", "--grid", "64"]).status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "seed = 5\nn = 3\ntol.spread = 4\n").unwrap();
    let out = dir.path().join("out");
    let o = kolmo(&[
        "run",
        "hormander",
        "--config",
        conf.to_str().unwrap(),
        "--n",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(&out);
    assert_eq!(r["config"]["pairs"], 2);
    assert_eq!(r["config"]["seed"], 5);
    assert_eq!(r["config"]["spread_tol"], 4.0);
    assert!(r["report"]["summary"]["gamma1.max_estimate"].as_f64().unwrap().is_finite());
}

#[test]
fn averaging_reports_the_fitted_slope() {
    let dir = tempfile::tempdir().unwrap();
    let o = kolmo(&[
        "run",
        "averaging",
        "--d",
        "1",
        "--R",
        "4,8,16,32",
        "--seed",
        "11",
        "--grid",
        "64,64",
        "--p",
        "2",
        "--q",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    assert!(r["report"]["summary"]["fitted_slope"].as_f64().unwrap() <= -0.7);
    assert_eq!(r["config"]["r_list"], serde_json::json!([4.0, 8.0, 16.0, 32.0]));
}

#[test]
fn regularity_reports_ratio_and_refinement_fields() {
    let dir = tempfile::tempdir().unwrap();
    let o = kolmo(&["run", "regularity", "--p", "2", "--q", "2", "--n", "10", "--seed", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    let s = &r["report"]["summary"];
    assert!(s["p2_q2.max_ratio"].as_f64().unwrap().is_finite());
    assert!(s["p2_q2.refinement_drift"].as_f64().unwrap() < 0.1);
    let csv = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 10 + 10 + 5);
}
