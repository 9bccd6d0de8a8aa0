//! Acceptance criterion 10: any command rerun with identical configuration
//! and seed produces byte-identical output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relmachine"))
}

fn machines_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../machines")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relmachine-acc-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Rerun the exact same command (same output path included) and capture the
/// produced bytes after each run.
fn run_twice(mut build: impl FnMut(&Path) -> Command, name: &str) -> (Vec<u8>, Vec<u8>) {
    let out = tmp(name);
    let mut captures = Vec::new();
    for _ in 0..2 {
        let status = build(&out).status().unwrap();
        assert!(status.success(), "{name} failed");
        captures.push(fs::read(&out).unwrap());
        fs::remove_file(&out).unwrap();
    }
    let b = captures.pop().unwrap();
    let a = captures.pop().unwrap();
    (a, b)
}

/// Criterion 10: byte-identical reruns for every command.
#[test]
fn acceptance_10_command_determinism() {
    let t0 = Instant::now();

    let (a, b) = run_twice(
        |out| {
            let mut c = bin();
            c.args(["simulate", "--machine"])
                .arg(machines_dir().join("fair_coin.json"))
                .args([
                    "--seed",
                    "42",
                    "--max-local-steps",
                    "9",
                    "--pad-uniform",
                    "0,9",
                    "--out",
                ])
                .arg(out);
            c
        },
        "simulate",
    );
    assert_eq!(a, b, "simulate reruns must be byte-identical");

    let config = tmp("det_scenario.json");
    fs::write(
        &config,
        r#"{"scenario": "psimtime", "detector": "fair_coin", "adversary": {"pads": [1, 9]}, "trials": 300, "seed": 42}"#,
    )
    .unwrap();
    let (a, b) = run_twice(
        |out| {
            let mut c = bin();
            c.args(["scenario", "--config"])
                .arg(&config)
                .arg("--out")
                .arg(out);
            c
        },
        "scenario",
    );
    assert_eq!(a, b, "scenario reruns must be byte-identical");

    let trace = tmp("det_trace.jsonl");
    bin()
        .args(["simulate", "--machine"])
        .arg(machines_dir().join("unary_increment.json"))
        .args(["--input", "111", "--max-local-steps", "9", "--out"])
        .arg(&trace)
        .output()
        .unwrap();
    let (a, b) = run_twice(
        |out| {
            let mut c = bin();
            c.args(["metrics", "--trace"])
                .arg(&trace)
                .arg("--out")
                .arg(out);
            c
        },
        "metrics",
    );
    assert_eq!(a, b, "metrics reruns must be byte-identical");

    let (a, b) = run_twice(
        |out| {
            let mut c = bin();
            c.args(["quantum-check", "--n-qubits", "2", "--seed", "7", "--out"])
                .arg(out);
            c
        },
        "quantum_check",
    );
    assert_eq!(a, b, "quantum-check reruns must be byte-identical");

    println!(
        "ACCEPTANCE 10 PASS: simulate/scenario/metrics/quantum-check reruns byte-identical ({:?})",
        t0.elapsed()
    );
}
