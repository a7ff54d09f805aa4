use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdg")).args(args).output().expect("spawn sdg")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn configuration_errors_exit_with_one() {
    for args in [
        &["solve", "--example", "ex3"][..],
        &["solve", "--order", "5"],
        &["solve", "--kappa", "-2"],
        &["solve", "--solver", "iterative"],
        &["solve", "--xi", "1/0"],
        &["convergence", "--levels", "8:2"],
        &["convergence", "--levels", "two"],
        &["solve", "--grid", "hexagons"],
        &["solve", "--no-such-flag"],
    ] {
        let out = sdg(args);
        assert_eq!(code(&out), 1, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    let out = sdg(&["solve", "--grid", &format!("file:{}", path(&missing))]);
    assert_eq!(code(&out), 3);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"vertices\": [[0, 0]").unwrap();
    let out = sdg(&["solve", "--grid", &format!("file:{}", path(&bad))]);
    assert_eq!(code(&out), 3);

    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let out = sdg(&["solve", "--n", "2", "--out", path(&blocker.join("sub"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let sliver = dir.path().join("sliver.json");
    fs::write(
        &sliver,
        r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "cells": [{"vertices": [0,1,2,3], "center": [0.5, 1e-11]}]}"#,
    )
    .unwrap();
    let out =
        sdg(&["solve", "--example", "ex1", "--n", "1", "--order", "3", "--grid", &format!("file:{}", path(&sliver))]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn generated_mesh_solves_like_the_builtin_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.json");
    let out = sdg(&["gen-mesh", "--example", "ex1", "--grid", "perturbed:0.2:11", "--n", "4", "--out", path(&mesh)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("16 cells"), "{}", stdout(&out));

    let common = ["solve", "--example", "ex1", "--n", "4", "--order", "2", "--kappa", "5"];
    let builtin = sdg(&[&common[..], &["--grid", "perturbed:0.2:11"]].concat());
    let grid = format!("file:{}", path(&mesh));
    let from_file = sdg(&[&common[..], &["--grid", &grid]].concat());
    assert_eq!(code(&builtin), 0);
    assert_eq!(code(&from_file), 0);
    assert_eq!(stdout(&builtin), stdout(&from_file));
}

#[test]
fn solve_writes_report_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = sdg(&["solve", "--example", "ex2", "--xi", "3/2", "--n", "4", "--cross-check", "--out", path(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("direct vs condensed"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["n"], 4);
    assert_eq!(report["m"], 1);
    let err_u = report["err_u_l2"].as_f64().unwrap();
    assert!(err_u.is_finite() && err_u > 0.0);

    let vtk = fs::read_to_string(out_dir.join("solution.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile"));
    assert!(vtk.contains("POINTS"));
}

#[test]
fn convergence_csv_is_reproducible_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| -> Vec<String> {
        [
            "convergence",
            "--example",
            "ex1",
            "--kappa",
            "4",
            "--order",
            "1,2",
            "--levels",
            "2:8",
            "--no-timing",
            "--out",
            out,
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let run = |p: &Path| {
        let argv = args(path(p));
        let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
        sdg(&argv)
    };
    let (ra, rb) = (run(&a), run(&b));
    assert_eq!(code(&ra), 0);
    assert_eq!(code(&rb), 0);

    let csv_a = fs::read_to_string(a.join("convergence.csv")).unwrap();
    let csv_b = fs::read_to_string(b.join("convergence.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
    assert_eq!(csv_a, stdout(&ra));

    let lines: Vec<&str> = csv_a.lines().collect();
    assert!(lines[0].starts_with("example,xi,kappa,m,n,h"));
    assert_eq!(lines.len(), 1 + 2 * 3);
    for row in &lines[1..] {
        assert!(row.ends_with(','), "wall_ms left empty: {row}");
    }
    let svg = fs::read_to_string(a.join("convergence.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.trim_end().ends_with("</svg>"));
}
