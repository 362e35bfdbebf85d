use std::process::{Command, Output};

use bergman_lab::report::DiagnosticsReport;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bergman-lab"));
    c.env_remove("BERGMAN_LAB_THREADS").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn report(out: &Output) -> DiagnosticsReport {
    DiagnosticsReport::parse(&out.stdout).expect("stdout is a report")
}

fn summary_f64(rep: &DiagnosticsReport, key: &str) -> f64 {
    rep.summary[key].as_f64().unwrap()
}

#[test]
fn verify_geometry_matches_golden_file() {
    let out = run(&["verify", "--suite", "geometry"]);
    assert_eq!(out.status.code(), Some(0));
    let golden = include_bytes!("golden/verify_geometry.json");
    assert_eq!(out.stdout, golden.as_slice());
    let rep = report(&out);
    let kernel = rep
        .values
        .iter()
        .find(|r| r["assertion"] == "kernel-identity")
        .unwrap();
    assert!(kernel["residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn compact_check_example() {
    let out = run(&["compact-check", "--symbol", "disk(0.5)", "--N", "64"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    let norms: Vec<f64> = rep.summary["remainder_norms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (got, want) in norms.iter().zip([0.0475, 0.004975, 0.00049975]) {
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
    assert_eq!(rep.summary["verdict"], "consistent with compactness");
}

#[test]
fn unbounded_symbol_is_data_not_failure() {
    let out = run(&["bound-check", "--symbol", "(1-abs(w)^2)^(-0.75)", "--N", "256"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out).summary["verdict"], "boundedness NOT supported: profile increasing");
}

#[test]
fn configuration_errors_exit_with_two() {
    for args in [
        &["berezin", "--radii", "0.5"][..],
        &["matrix", "--symbol", "w^("],
        &["matrix", "--symbol", "w", "--N", "0"],
        &["berezin", "--symbol", "w", "--radii", "1.2"],
        &["schur", "--symbol", "w", "--epsilon", "0.7"],
        &["luecking"],
        &["frobnicate"],
        &["verify", "--suite", "no-such-suite"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn error_messages_name_the_operation() {
    let out = run(&["matrix", "--symbol", "w^("]);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("parse symbol"), "{msg}");
}

#[test]
fn csv_matrix_is_row_major_pairs() {
    let out = run(&["matrix", "--symbol", "1", "--N", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    for (i, line) in lines.iter().enumerate() {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 6);
        for (j, pair) in cells.chunks(2).enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((pair[0] - want).abs() < 1e-12 && pair[1].abs() < 1e-12);
        }
    }
}

#[test]
fn config_file_and_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# berezin on two radii\nsymbol = abs(w)^2\nradii = 0, 0.5\nangles = 2\nN = 32\n").unwrap();
    let path = dir.path().join("out.json");
    let out = bin()
        .args(["berezin", "--config"])
        .arg(&cfg)
        .args(["--angles", "4", "--output"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let rep = DiagnosticsReport::parse(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(rep.values.len(), 8);
    assert_eq!(rep.parameters["N"], 32);
    assert!((rep.values[0]["direct_re"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn env_threads_is_accepted() {
    let out = bin()
        .env("BERGMAN_LAB_THREADS", "1")
        .args(["berezin", "--symbol", "w", "--radii", "0.3", "--angles", "4", "--N", "16"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(summary_f64(&report(&out), "max_difference") < 1e-10);
}

#[test]
fn luecking_atoms_and_density() {
    let out = run(&["luecking", "--atoms", "0,0,1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out).summary["decision"], "embedding holds");
    let out = run(&["luecking", "--symbol", "1"]);
    assert!((summary_f64(&report(&out), "norm_s") - 1.0).abs() < 1e-10);
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = ["berezin", "--symbol", "disk(0.5)", "--radii", "0.3,0.6", "--angles", "3", "--N", "24"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn numerical_errors_exit_with_three() {
    let out = run(&["berezin", "--symbol", "1/(0*w)", "--radii", "0.3", "--angles", "1", "--N", "8"]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("assemble") && msg.contains("w = "), "{msg}");
}
