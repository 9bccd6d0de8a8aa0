//! CLI behavior: exit codes, file formats, and the plumbing between
//! simulate and metrics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relmachine"))
}

fn machines_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../machines")
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relmachine-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

#[test]
fn simulate_unary_increment_writes_trace_and_summary() {
    let trace = tmp("inc.jsonl");
    let out = bin()
        .args(["simulate", "--machine"])
        .arg(machines_dir().join("unary_increment.json"))
        .args(["--input", "11", "--max-local-steps", "5", "--out"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("\"outcome\":\"accept\""));
    assert!(summary.contains("\"final_local_tape\":\"111\""));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.lines().any(|l| l.contains("\"k_tau\":1")));
}

#[test]
fn simulate_rejects_malformed_machine_file() {
    let bad = tmp("bad.json");
    fs::write(&bad, "{\"schema_version\": 1,").unwrap();
    let out = bin()
        .args(["simulate", "--machine"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    // serde_json diagnostics carry line and column.
    assert!(err.contains("line") && err.contains("column"), "{err}");
}

#[test]
fn simulate_guard_violation_exits_three() {
    let out = bin()
        .args(["simulate", "--machine"])
        .arg(machines_dir().join("scrap_walker.json"))
        .args(["--max-local-steps", "400", "--out"])
        .arg(tmp("walker.jsonl"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
}

#[test]
fn simulate_requires_seed_for_stochastic_runs() {
    let out = bin()
        .args(["simulate", "--machine"])
        .arg(machines_dir().join("fair_coin.json"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn metrics_reproduces_the_worked_gammas() {
    let trace = tmp("padded.jsonl");
    let out = bin()
        .args(["simulate", "--machine"])
        .arg(machines_dir().join("oscillator.json"))
        .args(["--max-local-steps", "3", "--pad-schedule", "0,8,8", "--out"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let out = bin()
        .args(["metrics", "--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let gammas: Vec<u64> = report["per_tau"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|r| r["gamma_t"].as_u64())
        .collect();
    assert_eq!(gammas, vec![9, 9]);
    let ks: Vec<u64> = report["per_tau"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["k_tau"].as_u64().unwrap())
        .collect();
    assert_eq!(ks, vec![1, 10, 19]);
}

#[test]
fn metrics_csv_and_json_carry_identical_values() {
    let trace = tmp("fmt.jsonl");
    bin()
        .args(["simulate", "--machine"])
        .arg(machines_dir().join("unary_increment.json"))
        .args(["--input", "111", "--max-local-steps", "9", "--out"])
        .arg(&trace)
        .output()
        .unwrap();
    let json_out = bin()
        .args(["metrics", "--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    let csv_out = bin()
        .args(["metrics", "--format", "csv", "--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&json_out), 0);
    assert_eq!(code(&csv_out), 0);
    let report: serde_json::Value = serde_json::from_slice(&json_out.stdout).unwrap();
    let csv = String::from_utf8(csv_out.stdout).unwrap();
    for row in report["per_tau"].as_array().unwrap() {
        let tau = row["tau"].as_u64().unwrap();
        let k = row["k_tau"].as_u64().unwrap();
        let g = row["g_tau"].as_u64().unwrap();
        let gamma = row["gamma_t"]
            .as_u64()
            .map(|v| v.to_string())
            .unwrap_or_default();
        let gamma_g = row["gamma_g"]
            .as_f64()
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        let line = format!("{tau},{k},{gamma},{g},{gamma_g}");
        assert!(csv.contains(&line), "missing `{line}` in:\n{csv}");
    }
}

#[test]
fn metrics_on_summary_trace_demands_full_mode_for_space() {
    let trace = tmp("summary.jsonl");
    bin()
        .args(["simulate", "--machine"])
        .arg(machines_dir().join("unary_increment.json"))
        .args([
            "--input",
            "11",
            "--max-local-steps",
            "5",
            "--snapshots",
            "summary",
            "--out",
        ])
        .arg(&trace)
        .output()
        .unwrap();
    let out = bin()
        .args(["metrics", "--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("--snapshots full"), "hint missing: {err}");
    // Time metrics remain available.
    let out = bin()
        .args(["metrics", "--time-only", "--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
}

#[test]
fn metrics_rejects_empty_trace() {
    let trace = tmp("empty.jsonl");
    fs::write(&trace, "").unwrap();
    let out = bin()
        .args(["metrics", "--trace"])
        .arg(&trace)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn scenario_unknown_name_exits_two() {
    let config = tmp("unknown.json");
    fs::write(
        &config,
        r#"{"scenario": "haruspicy", "adversary": {}, "seed": 1}"#,
    )
    .unwrap();
    let out = bin()
        .args(["scenario", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn scenario_degenerate_pads_exit_two() {
    let config = tmp("degenerate.json");
    fs::write(
        &config,
        r#"{"scenario": "simtime", "detector": "constant", "adversary": {"pads": [5, 5]}, "trials": 10, "seed": 1}"#,
    )
    .unwrap();
    let out = bin()
        .args(["scenario", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("indistinguishable"));
}

#[test]
fn scenario_spoof_report_matches_shipped_config() {
    let report_path = tmp("spoof.json");
    let out = bin()
        .args(["scenario", "--config"])
        .arg(scenarios_dir().join("spoof_equality.json"))
        .arg("--out")
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["spoof"]["installed"], "000");
    assert_eq!(report["spoof"]["install_local_steps"], 1);
    assert_eq!(report["halts_from_every_candidate"], true);
    assert!(report["config_hash"].as_str().unwrap().len() == 16);
}

#[test]
fn scenario_game_writes_trial_log_reference() {
    let config = tmp("mini_game.json");
    fs::write(
        &config,
        r#"{"scenario": "simtime", "detector": "constant", "adversary": {"pads": [1, 9]}, "trials": 50, "seed": 9}"#,
    )
    .unwrap();
    let report_path = tmp("mini_game_report.json");
    let out = bin()
        .args(["scenario", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&report_path)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    let log_path = report["trial_log"].as_str().unwrap();
    let log = fs::read_to_string(log_path).unwrap();
    assert_eq!(log.lines().count(), 50);
}

#[test]
fn quantum_check_hamiltonian_file_round_trip() {
    let h_path = tmp("h.json");
    fs::write(&h_path, r#"{"n_qubits": 1, "entries": [[0, 1, 1.0, 0.0]]}"#).unwrap();
    let out = bin()
        .args(["quantum-check", "--hamiltonian"])
        .arg(&h_path)
        .args(["--tau", "1.5707963267948966"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["hermitian"], true);
    assert!(report["deviation_from_exact"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn quantum_check_random_requires_seed() {
    let out = bin().args(["quantum-check"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn log_env_var_enables_progress_lines() {
    let run = |log: Option<&str>| {
        let mut cmd = bin();
        cmd.args(["simulate", "--machine"])
            .arg(machines_dir().join("unary_increment.json"))
            .args(["--input", "1", "--max-local-steps", "3", "--out"])
            .arg(tmp("log_probe.jsonl"))
            .env_remove("RELMACHINE_LOG");
        if let Some(v) = log {
            cmd.env("RELMACHINE_LOG", v);
        }
        String::from_utf8(cmd.output().unwrap().stderr).unwrap()
    };
    assert!(run(Some("1")).contains("relmachine:"));
    assert!(!run(None).contains("relmachine:"));
}
