use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spde_hypotest_cli::RunConfig;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spde-hypotest")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn simulate_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("paths.csv");
    let o = run(&["simulate", "--theta", "1", "--n-modes", "3", "--horizon", "0.5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,u_1,u_2,u_3\n"));
    assert_eq!(text.lines().count(), 1 + 51);
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}.csv"))).collect();
    for p in &paths {
        let o = run(&["simulate", "--theta", "0.7", "--n-modes", "2", "--seed", "99", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap());
}

#[test]
fn missing_theta_exits_2_and_names_it() {
    let o = run(&["simulate", "--n-modes", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`theta`"), "{}", stderr(&o));
}

#[test]
fn unknown_regime_exits_2() {
    let o = run(&["test", "--theta", "1", "--theta0", "1", "--theta1", "2", "--regime", "sideways"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn invalid_invariants_exit_2() {
    let o = run(&["type1", "--theta0", "2", "--theta1", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["type1", "--theta0", "1", "--theta1", "2", "--gamma", "0.4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_3() {
    let o = run(&["sld-table", "--theta0", "1", "--theta1", "2", "--table", "rate", "--grid", "5"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bad_thread_count_exits_2() {
    let o = Command::new(env!("CARGO_BIN_EXE_spde-hypotest"))
        .args(["type1", "--theta0", "1", "--theta1", "2"])
        .env("SPDE_HYPOTEST_THREADS", "none")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn test_prints_a_json_outcome_with_default_delta() {
    let o = run(&["test", "--theta", "1", "--theta0", "1", "--theta1", "2", "--n-modes", "3", "--horizon", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    for key in ["statistic", "threshold", "reject", "log_lr", "log_threshold_lr", "theta_hat"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    // With δ = 0 the statistic threshold is exactly -q_α.
    let threshold = v["threshold"].as_f64().unwrap();
    assert!((threshold + 1.6448536269514722).abs() < 1e-12);
}

#[test]
fn sweep_over_two_horizons_has_two_rows() {
    let o = run(&["sweep", "--theta0", "1", "--theta1", "2", "--sweep", "10,20", "--reps", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(data_rows(&text).len(), 2);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("T,estimate,standard_error"));
    assert!(header.contains("type1"));
}

#[test]
fn sld_table_zero_row_is_zero() {
    let o = run(&["sld-table", "--theta0", "1", "--theta1", "2", "--n-modes", "2", "--horizon", "2", "--grid", "-0.5,0,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let row = data_rows(&text).into_iter().find(|r| r.starts_with("0,")).unwrap().to_string();
    assert_eq!(row, "0,0,0,0,0,0");
}

#[test]
fn monte_carlo_reruns_are_identical() {
    let args = ["power", "--theta0", "1", "--theta1", "1.5", "--n-modes", "2", "--horizon", "5", "--reps", "300", "--seed", "7"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# experiment\ntheta0 = 1\ntheta1 = 2\nreps = 50\nhorizon = 3\n").unwrap();
    let o = run(&["type1", "--config", cfg.to_str().unwrap(), "--reps", "80"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let parsed = RunConfig::from_header(&stdout(&o)).unwrap();
    assert_eq!(parsed.reps, 80);
    assert_eq!(parsed.horizon, 3.0);
}

#[test]
fn bad_config_line_is_attributed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "theta0 = 1\ntheta1 = two\n").unwrap();
    let o = run(&["type1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains(":2:") && err.contains("`theta1`"), "{err}");
}

#[test]
fn report_header_reparses_to_the_same_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.csv");
    let o = run(&[
        "compare", "--theta0", "1", "--theta1", "1.5", "--n-modes", "2", "--horizon", "4", "--reps", "100",
        "--shift", "0.25", "--compare-shift", "-0.5", "--sampler", "grid", "--steps-per-unit", "20",
        "--seed", "18446744073709551615", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let parsed = RunConfig::from_header(&text).unwrap();
    let mut expected = RunConfig::default();
    for (k, v) in [
        ("theta0", "1"), ("theta1", "1.5"), ("n_modes", "2"), ("horizon", "4"), ("reps", "100"), ("shift", "0.25"),
        ("compare_shift", "-0.5"), ("sampler", "grid"), ("steps_per_unit", "20"), ("seed", "18446744073709551615"),
    ] {
        expected.set(k, v).unwrap();
    }
    expected.out = Some(Path::new(out.to_str().unwrap()).to_path_buf());
    assert_eq!(parsed, expected);
}

#[test]
fn json_format_keeps_numbers_unquoted() {
    let o = run(&["type1", "--theta0", "1", "--theta1", "2", "--reps", "50", "--format", "json", "--seed", "18446744073709551615"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["seed"].as_u64(), Some(u64::MAX));
    assert!(v["config"]["alpha"].is_number());
    assert!(v["report"]["points"][0]["estimate"].is_number());
}
