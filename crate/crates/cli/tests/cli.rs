//! End-to-end runs of the installed binary: flag handling, file output,
//! format stability, exit codes, and determinism across thread counts.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn geomphase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geomphase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 output")
}

/// Data rows of a CSV artifact, comment lines stripped.
fn data_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|cell| cell.parse().expect("numeric cell"))
                .collect()
        })
        .collect()
}

#[test]
fn vanishing_strength_gives_unit_probability_and_zero_phase() {
    let out = geomphase(&["postselected", "--c", "0", "--theta-range", "0:pi:64"]);
    assert!(out.status.success());
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 64);
    for row in &rows {
        assert_eq!(row[2], 1.0, "P != 1 at theta = {}", row[1]);
        assert!(row[3].abs() < 1e-12, "chi != 0 at theta = {}", row[1]);
    }
}

#[test]
fn equator_phase_above_critical_is_minus_pi() {
    let out = geomphase(&["postselected", "--c", "3", "--theta", "pi/2"]);
    assert!(out.status.success());
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 1);
    assert!((rows[0][3] + std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn undefined_phase_is_flagged_not_fatal() {
    let out = geomphase(&["postselected", "--c", "2.1251444", "--theta", "pi/2"]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1, "the flagged point is still written");
    assert!(rows[0][3].is_nan(), "flagged phase must be NaN");
    assert!(text.contains("# summary: flagged = 1"));
}

#[test]
fn chern_rows_cross_the_transition() {
    let out = geomphase(&["chern", "--c-range", "1:3:2", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["config"]["command"], "chern");
    let rows = doc["rows"].as_array().expect("rows array");
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["chern_endpoint"], 0);
    assert_eq!(rows[0]["chern_plaquette"], 0);
    assert_eq!(rows[1]["chern_endpoint"], -1);
    assert_eq!(rows[1]["chern_plaquette"], -1);
}

#[test]
fn near_critical_chern_fails_with_the_break_location() {
    let out = geomphase(&["chern", "--c", "2.1255"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).expect("utf-8 stderr");
    assert!(err.contains("theta = pi/2"), "message names the break: {err}");
}

#[test]
fn critical_reports_both_strengths() {
    let out = geomphase(&["critical"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let read = |key: &str| -> f64 {
        let line = text
            .lines()
            .find(|l| l.starts_with(&format!("# summary: {key} = ")))
            .unwrap_or_else(|| panic!("missing summary key {key}"));
        line.rsplit('=').next().unwrap().trim().parse().unwrap()
    };
    assert!((read("postselected_root") - 2.1251444).abs() < 1e-6);
    assert!(read("postselected_root_probability") < 1e-15);
    assert!((read("averaged_c") - 3.35).abs() < 0.3);
    assert!((read("averaged_theta") - std::f64::consts::PI / 3.0).abs() < 0.15);
    assert!(read("averaged_visibility") < 1e-4);
}

#[test]
fn empty_bracket_exits_four() {
    let out = geomphase(&["critical", "--c-range", "0.5:1.5"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn distribution_is_deterministic_across_thread_counts() {
    let dir = tempdir().expect("tempdir");
    let run = |threads: &str, name: &str| -> Vec<u8> {
        let path = dir.path().join(name);
        let out = geomphase(&[
            "distribution",
            "--c",
            "0.8",
            "--steps",
            "60",
            "--realizations",
            "400",
            "--threads",
            threads,
            "-o",
            path.to_str().expect("utf-8 path"),
        ]);
        assert!(out.status.success());
        std::fs::read(path).expect("artifact written")
    };
    assert_eq!(run("1", "one.csv"), run("6", "six.csv"));
}

#[test]
fn distribution_histogram_counts_accepted_records() {
    let out = geomphase(&[
        "distribution",
        "--c",
        "0.5",
        "--steps",
        "40",
        "--realizations",
        "300",
        "--bins",
        "8",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 8);
    let accept: f64 = text
        .lines()
        .find(|l| l.starts_with("# summary: accept_rate = "))
        .and_then(|l| l.rsplit('=').next())
        .and_then(|v| v.trim().parse().ok())
        .expect("accept_rate present");
    let counted: f64 = rows.iter().map(|r| r[2]).sum();
    assert_eq!(counted, (accept * 300.0).round());
}

#[test]
fn interferometer_ports_conserve_input() {
    let out = geomphase(&[
        "interferometer",
        "--scheme",
        "postselected",
        "--c",
        "1.0",
        "--theta",
        "pi/3",
        "--gamma-range",
        "0:2pi:17",
        "--i0",
        "2.5",
    ]);
    assert!(out.status.success());
    let rows = data_rows(&stdout(&out));
    assert_eq!(rows.len(), 17);
    for row in &rows {
        assert!((row[1] + row[2] - 2.5).abs() < 1e-12);
    }
}

#[test]
fn config_file_fills_gaps_and_flags_win() {
    let dir = tempdir().expect("tempdir");
    let path = dir.path().join("defaults.conf");
    std::fs::write(&path, "theta = pi/3\nsteps = 40\nseed = 9\n").expect("config written");
    let out = geomphase(&[
        "distribution",
        "--c",
        "0.5",
        "--realizations",
        "150",
        "--steps",
        "50",
        "--config",
        path.to_str().expect("utf-8 path"),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# theta = 1.04719"), "file key applies");
    assert!(text.contains("# steps = 50"), "flag overrides file");
    assert!(text.contains("# seed = 9"), "file fills the gap");
}

#[test]
fn output_lands_in_the_directory_from_the_environment() {
    let dir = tempdir().expect("tempdir");
    let out = Command::new(env!("CARGO_BIN_EXE_geomphase"))
        .args(["chern", "--c", "1", "-o", "from_env.csv"])
        .env("GEOMPHASE_OUTPUT_DIR", dir.path())
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    assert!(Path::new(&dir.path().join("from_env.csv")).exists());
}

#[test]
fn usage_errors_exit_one() {
    let out = geomphase(&["distribution", "--c", "0.5", "--realizations", "3"]);
    assert_eq!(out.status.code(), Some(1), "realizations below 100");
    let out = geomphase(&["postselected"]);
    assert_eq!(out.status.code(), Some(1), "missing --c");
    let out = geomphase(&["postselected", "--c", "1", "--c-range", "0:1:5"]);
    assert_eq!(out.status.code(), Some(1), "conflicting flags");
}
