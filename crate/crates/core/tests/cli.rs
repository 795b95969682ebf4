use std::process::{Command, Output};

use polyhorizon::operator::sigma_regular_constant;
use polyhorizon::study::read_csv;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyhorizon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn sigma_table_matches_closed_forms() {
    let out = run(&["sigma", "--kernel", "constant", "--n-list", "4,8,64"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (row, n) in rows.iter().zip([4, 8, 64]) {
        let cols: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(cols[0], n.to_string());
        let quad: f64 = cols[1].parse().unwrap();
        assert!((quad - sigma_regular_constant(n).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn apply_quadratic_on_ball_prints_four() {
    let out = run(&["apply", "--func", "quadratic", "--strategy", "ball", "--delta", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "4.000000");
}

#[test]
fn apply_rescaled_octagon() {
    let out = run(&[
        "apply", "--func", "quadratic", "--strategy", "regular", "--n", "8", "--delta", "0.05", "--rescaled",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "4.000000");
    let out = run(&["apply", "--func", "affine", "--strategy", "regular", "--n", "7", "--delta", "0.1"]);
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!(v.abs() < 1e-6);
}

#[test]
fn argument_errors_exit_two() {
    assert_eq!(run(&["sigma", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["apply", "--func", "cubic", "--delta", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one() {
    let out = run(&["apply", "--func", "quadratic", "--strategy", "regular", "--delta", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--n"));
    assert_eq!(run(&["apply", "--func", "quadratic", "--delta=0"]).status.code(), Some(1));
    let out = run(&["study", "--config", "/nonexistent/cfg.json", "--out", "/tmp/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    // Odd side counts are rejected by the solver.
    let out = run(&["solve", "--strategy", "regular", "--n", "7", "--delta", "0.25"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn solve_and_kgamma() {
    let out = run(&["solve", "--strategy", "ball", "--delta", "0.25", "--beta", "1.5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("l2_error"));
    let out = run(&["kgamma", "--strategy", "regular", "--n", "8", "--delta", "0.1"]);
    let v: f64 = stdout(&out).trim().parse().unwrap();
    assert!((v - 39.874).abs() < 0.1);
    let out = run(&["norm-limit", "--strategy", "ball", "--delta", "0.125"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("limit     4.93480220"));
}

#[test]
fn study_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let csv = dir.path().join("out.csv");
    std::fs::write(&cfg, r#"{"path":"FixedN","delta_list":[0.25,0.125],"n":8}"#).unwrap();
    let out = run(&["study", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("l2_error"));
    let rows = read_csv(&csv).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].rate.is_none() && rows[1].rate.is_some());
    assert_eq!(rows[1].n, 8);

    std::fs::write(&cfg, r#"{"path":"FixedN","delta_list":[0.25,0.125],"n":8,"colour":"red"}"#).unwrap();
    let out = run(&["study", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
