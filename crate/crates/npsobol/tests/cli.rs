//! End-to-end checks of the command-line interface.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_npsobol"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("npsobol_cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn lines_of(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn simulate_then_estimate_round_trip() {
    let dir = tmp("sim_est");
    run_ok(bin().args([
        "simulate",
        "--model",
        "gsobol",
        "--gsobol-a",
        "0,3",
        "--n",
        "120",
        "--seed",
        "9",
        "--out",
        dir.to_str().unwrap(),
    ]));
    let dataset = dir.join("dataset.csv");
    assert_eq!(lines_of(&dataset), 121);

    let stdout = run_ok(bin().args([
        "estimate",
        dataset.to_str().unwrap(),
        "--response",
        "y",
        "--bandwidth",
        "cv",
        "--out",
        dir.to_str().unwrap(),
    ]));
    assert!(stdout.contains("x1"), "stdout: {stdout}");
    assert!(dir.join("estimates.csv").exists());
    assert!(dir.join("estimates.json").exists());

    // The dominant input should rank first by a wide margin.
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("estimates.json")).unwrap())
            .unwrap();
    let records = json.as_array().unwrap();
    assert_eq!(records.len(), 2);
    let value = |name: &str| {
        records
            .iter()
            .find(|r| r["variable"] == name)
            .unwrap()["estimate"]
            .as_f64()
            .unwrap()
    };
    assert!(value("x1") > value("x2"));
}

#[test]
fn estimate_is_deterministic_across_runs() {
    let dir = tmp("det");
    run_ok(bin().args([
        "simulate", "--model", "gsobol", "--gsobol-a", "0,9", "--n", "80", "--seed", "4",
        "--out", dir.to_str().unwrap(),
    ]));
    let dataset = dir.join("dataset.csv");
    let out_a = tmp("det_a");
    let out_b = tmp("det_b");
    for out in [&out_a, &out_b] {
        run_ok(bin().args([
            "estimate",
            dataset.to_str().unwrap(),
            "--response",
            "y",
            "--bandwidth",
            "boot",
            "--boot-B",
            "10",
            "--seed",
            "77",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    assert_eq!(
        std::fs::read(out_a.join("estimates.csv")).unwrap(),
        std::fs::read(out_b.join("estimates.csv")).unwrap()
    );
}

#[test]
fn estimate_clamp_flag_bounds_values() {
    let dir = tmp("clamp");
    // Pure-noise response: raw estimates can dip below zero.
    run_ok(bin().args([
        "simulate", "--model", "gsobol", "--gsobol-a", "99,99,99", "--n", "60", "--seed", "2",
        "--out", dir.to_str().unwrap(),
    ]));
    run_ok(bin().args([
        "estimate",
        dir.join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
        "--clamp",
        "--out",
        dir.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(dir.join("estimates.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if let Ok(v) = cells[2].parse::<f64>() {
            assert!((0.0..=1.0).contains(&v), "clamped estimate {v}");
        }
    }
}

#[test]
fn estimate_reports_csv_errors_with_location() {
    let dir = tmp("bad_csv");
    std::fs::write(dir.join("bad.csv"), "a,y\n1,2\n3,abc\n5,6\n").unwrap();
    let out = bin()
        .args([
            "estimate",
            dir.join("bad.csv").to_str().unwrap(),
            "--response",
            "y",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 3"), "stderr: {stderr}");
}

#[test]
fn replicate_fast_writes_report_files() {
    let dir = tmp("replicate");
    run_ok(bin().args([
        "replicate",
        "--model",
        "gsobol",
        "--gsobol-a",
        "0,5",
        "--fast",
        "--n-list",
        "40",
        "--boot-B",
        "6",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]));
    for f in ["report.csv", "report.json", "raw.csv", "truths.csv", "failures.csv"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    // 1 n x 2 orders x 2 variables x 2 methods = 8 aggregate rows.
    assert_eq!(lines_of(&dir.join("report.csv")), 9);
    // raw: 20 replications x 2 orders x 2 variables x 2 methods.
    assert_eq!(lines_of(&dir.join("raw.csv")), 161);
}

#[test]
fn plot_data_emits_figure_series() {
    let dir = tmp("plot");
    run_ok(bin().args([
        "plot-data",
        "--model",
        "gsobol",
        "--gsobol-a",
        "0,4",
        "--variable",
        "0",
        "--n",
        "60",
        "--boot-B",
        "8",
        "--seed",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(dir.join("plot_data.csv")).unwrap();
    // header + 60 scatter + 8 x 200 curves + 200 mean
    assert_eq!(text.lines().count(), 1 + 60 + 8 * 200 + 200);
    assert!(text.lines().any(|l| l.starts_with("mean,")));
}

#[test]
fn kernel_order_flag_is_validated() {
    let out = bin()
        .args([
            "estimate", "nonexistent.csv", "--response", "y", "--kernel-order", "3",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
