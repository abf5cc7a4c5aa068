use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lienard_cli::report::{read_trajectory_csv, RunReport};
use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn lienard(args: &[&str]) -> Output {
    lienard_with_env(args, &[])
}

fn lienard_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lienard"));
    cmd.args(args).env_remove("LIENARD_TOLERANCES");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn run_into(name: &str, dir: &Path) -> RunReport {
    let out = lienard(&["run", scenario(name).to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn check(name: &str, theorem: &str) -> Value {
    let out = lienard(&["check", scenario(name).to_str().unwrap(), "--theorem", theorem]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn run_vanderpol_writes_increasing_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_into("vanderpol.json", dir.path());
    let text = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(text.starts_with("t,x,y\n"));
    let rows = read_trajectory_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), report.samples);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    // 17 significant digits.
    let first_x = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(first_x, "2.0000000000000000e0");
    assert_eq!(report.trajectory, "trajectory.csv");
}

#[test]
fn missing_function_exits_with_schema_code_and_path() {
    let out = lienard(&["run", scenario("malformed/missing-g.json").to_str().unwrap(), "--out", "unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("functions.g"), "{}", stderr(&out));
    assert!(!Path::new("unused").exists());
}

#[test]
fn malformed_corpus_is_rejected_with_field_paths() {
    for entry in std::fs::read_dir(scenario("malformed")).unwrap() {
        let path = entry.unwrap().path();
        let out = lienard(&["check", path.to_str().unwrap(), "--theorem", "t_o"]);
        assert_eq!(out.status.code(), Some(2), "{}", path.display());
        let name = path.file_name().unwrap().to_str().unwrap();
        let (_, _, field) = lienard_cli::shipped::MALFORMED
            .iter()
            .find(|(n, _, _)| *n == name)
            .expect("corpus file is embedded");
        assert!(stderr(&out).contains(field), "{name}: {}", stderr(&out));
    }
}

#[test]
fn blowup_probe_reports_escape() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_into("blowup.json", dir.path());
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["status"]["status"], "escaped");
    assert_eq!(json["analyses"]["boundedness"]["verdict"], "escaped");
    // y' = 1 + y² from 0 reaches infinity at π/2.
    let t_esc = json["status"]["t_esc"].as_f64().unwrap();
    assert!((t_esc - std::f64::consts::FRAC_PI_2).abs() < 1e-3, "{t_esc}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for name in ["nc-oscillation.json", "caputo-stable.json"] {
        let ra = run_into(name, a.path());
        let rb = run_into(name, b.path());
        let ca = std::fs::read(a.path().join("trajectory.csv")).unwrap();
        let cb = std::fs::read(b.path().join("trajectory.csv")).unwrap();
        assert!(ca == cb, "{name}");
        assert_eq!(ra.without_timings(), rb.without_timings(), "{name}");
    }
}

#[test]
fn check_oscillation_pipeline() {
    let report = check("nc-oscillation.json", "t_o");
    for (name, v) in report["hypotheses"].as_object().unwrap() {
        assert_eq!(v["verdict"], "holds_on_grid", "{name}");
    }
    assert_eq!(report["conclusion"]["verdict"], "confirmed");
    assert!(report["conclusion"]["detail"].as_str().unwrap().contains("Oscillatory"));
}

#[test]
fn check_caputo_stability() {
    let report = check("caputo-stable.json", "caputo_stability");
    assert_eq!(report["conclusion"]["verdict"], "confirmed");
    assert!(report["conclusion"]["detail"].as_str().unwrap().contains("stable evidence"));
}

#[test]
fn check_vanderpol_cycle() {
    let report = check("vanderpol.json", "lienard_cycle");
    assert_eq!(report["conclusion"]["verdict"], "confirmed");
    assert!(report["conclusion"]["detail"].as_str().unwrap().starts_with("unique cycle"));
}

#[test]
fn check_rejects_unknown_theorem() {
    let out = lienard(&["check", scenario("vanderpol.json").to_str().unwrap(), "--theorem", "t_9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_rejects_theorem_for_other_family() {
    let out = lienard(&["check", scenario("vanderpol.json").to_str().unwrap(), "--theorem", "caputo_stability"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

fn summary(dir: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(dir.join("summary.csv")).unwrap();
    r.records().map(Result::unwrap).collect()
}

#[test]
fn alpha_sweep_writes_one_report_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = lienard(&[
        "sweep",
        scenario("nc-oscillation.json").to_str().unwrap(),
        "--param",
        "alpha",
        "--values",
        "0.3,0.5,0.7,0.9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = summary(dir.path());
    assert_eq!(rows.len(), 4);
    for (row, v) in rows.iter().zip(["0.3", "0.5", "0.7", "0.9"]) {
        assert_eq!(&row[0], v);
        assert!(dir.path().join(format!("alpha={v}")).join("report.json").exists());
    }
}

#[test]
fn kernel_sweep_covers_all_six_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let kinds = "ordinary,nc_exp_inv,conf_exp,conf_khalil,nc_pow_pos,nc_pow_neg";
    let out = lienard(&[
        "sweep",
        scenario("nc-oscillation.json").to_str().unwrap(),
        "--param",
        "kernel",
        "--values",
        kinds,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(summary(dir.path()).len(), 6);
    for k in kinds.split(',') {
        assert!(dir.path().join(format!("kernel={k}")).join("trajectory.csv").exists());
    }
}

#[test]
fn mu_sweep_keeps_van_der_pol_amplitude_near_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = lienard(&[
        "sweep",
        scenario("vanderpol.json").to_str().unwrap(),
        "--param",
        "mu",
        "--values",
        "0.5,1,2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = summary(dir.path());
    assert_eq!(rows.len(), 3);
    let header = csv::Reader::from_path(dir.path().join("summary.csv")).unwrap().headers().unwrap().clone();
    let col = header.iter().position(|h| h == "amplitude").unwrap();
    for row in &rows {
        let amp: f64 = row[col].parse().unwrap();
        assert!((amp - 2.0).abs() < 0.1, "μ = {}: {amp}", &row[0]);
    }
}

#[test]
fn sweep_rejects_unknown_parameter() {
    let out = lienard(&[
        "sweep",
        scenario("vanderpol.json").to_str().unwrap(),
        "--param",
        "damping",
        "--values",
        "1,2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("damping"));
}

#[test]
fn tolerance_override_reaches_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = lienard_with_env(
        &["run", scenario("vanderpol.json").to_str().unwrap(), "--out", dir.path().to_str().unwrap()],
        &[("LIENARD_TOLERANCES", "rel=1e-6,abs=1e-8")],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: RunReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!((report.scenario.tolerances.rel, report.scenario.tolerances.abs), (1e-6, 1e-8));

    let bad = lienard_with_env(
        &["check", scenario("vanderpol.json").to_str().unwrap(), "--theorem", "t_o"],
        &[("LIENARD_TOLERANCES", "tol=3")],
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verdicts_survive_tighter_tolerances() {
    for (name, theorem) in [
        ("nc-oscillation.json", "t_o"),
        ("nc-contrast.json", "t_o"),
        ("vanderpol.json", "lienard_cycle"),
        ("gs-continuable.json", "t_1"),
    ] {
        let path = scenario(name);
        let args = ["check", path.to_str().unwrap(), "--theorem", theorem];
        let base: Value = serde_json::from_slice(&lienard(&args).stdout).unwrap();
        let tight = lienard_with_env(&args, &[("LIENARD_TOLERANCES", "rel=1e-9,abs=1e-11")]);
        let tight: Value = serde_json::from_slice(&tight.stdout).unwrap();
        assert_eq!(base["conclusion"]["verdict"], tight["conclusion"]["verdict"], "{name}");
    }
}

#[test]
fn selftest_passes_with_loosened_tolerances() {
    let out = lienard_with_env(&["selftest", "--only", "12"], &[("LIENARD_TOLERANCES", "rel=1e-5,abs=1e-7")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[PASS] 12 determinism_and_schema"), "{stdout}");
}
