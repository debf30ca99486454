use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn railtherm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_railtherm")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = railtherm(args);
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "railtherm {args:?} failed\nstdout:\n{stdout}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
        .display()
        .to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_every_subcommand() {
    let help = ok(&["--help"]);
    for cmd in ["ingest", "fit", "evaluate", "simulate", "compare", "report", "synth"] {
        assert!(help.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn usage_and_input_errors_are_not_check_failures() {
    assert_eq!(railtherm(&["frobnicate"]).status.code(), Some(2));
    let out = railtherm(&["fit", "--train", "/nonexistent/dir", "--out", "/tmp/never.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn train_fit_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train");
    let val = dir.path().join("val");
    let model = dir.path().join("model.json");
    let report = dir.path().join("mae.csv");
    ok(&["synth", "training", "--out", s(&train), "--days", "6"]);
    ok(&["--seed", "99", "synth", "training", "--out", s(&val), "--days", "2"]);
    ok(&["fit", "--train", s(&train), "--out", s(&model)]);
    assert!(model.exists());
    let stdout = ok(&["evaluate", "--model", s(&model), "--validation", s(&val), "--report", s(&report)]);
    assert!(stdout.contains("PASS"));
    assert!(report.exists());

    // an impossible threshold is a check failure, exit 1
    let out = railtherm(&[
        "evaluate",
        "--model",
        s(&model),
        "--validation",
        s(&val),
        "--report",
        s(&report),
        "--max-mae",
        "0.0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn synth_raw_then_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    let out = dir.path().join("traj");
    ok(&["--config", &scenario("cold_day"), "synth", "raw", "--out", s(&raw)]);
    ok(&["ingest", "--raw", s(&raw), "--out", s(&out)]);
    assert!(out.join("summary.csv").exists());
    assert!(out.join("60s").is_dir());
    assert!(out.join("300s").is_dir());
}

fn log_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.to_string_lossy().ends_with("_log.csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn simulate_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let stdout = ok(&["--config", &scenario("hot_day"), "simulate", "--out", s(&runs)]);
    assert!(!stdout.contains("FAIL"));
    let logs = log_files(&runs);
    assert_eq!(logs.len(), 2, "{logs:?}");
    let (a, b) = (&logs[0], &logs[1]);
    assert!(s(a).contains("activated") && s(b).contains("deactivated"));

    let cmp = dir.path().join("cmp");
    ok(&["--config", &scenario("hot_day"), "compare", "--a", s(a), "--b", s(b), "--out", s(&cmp)]);
    let out = railtherm(&["--config", &scenario("hot_day"), "compare", "--a", s(a), "--b", s(b), "--min-savings", "99"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_writes_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    ok(&["--config", &scenario("cold_day"), "report", "--out", s(&out)]);
    let svgs = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert!(svgs >= 5, "{svgs} plots");
    assert!(out.join("comparison.csv").exists());
}
