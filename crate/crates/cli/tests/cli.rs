//! End-to-end tests of the command line surface: argument validation and
//! exit codes, output formats, determinism across worker counts, preset
//! export round-trips, and the frame event log.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lora-tow-sim"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "expected success for {args:?}, got {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

// ---------------------------------------------------------------------------
// Exit codes
// ---------------------------------------------------------------------------

#[test]
fn test_unknown_builtin_is_a_config_error() {
    let out = bin().args(["run", "--builtin", "no-such-scenario"]).output().expect("spawn");
    assert_eq!(exit_code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("no-such-scenario"), "stderr should name the offender: {err}");
}

#[test]
fn test_missing_source_is_a_config_error() {
    let out = bin().args(["run"]).output().expect("spawn");
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn test_bogus_policy_is_rejected() {
    let out = bin()
        .args(["run", "--builtin", "ch-static", "--policy", "bogus"])
        .output()
        .expect("spawn");
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn test_unreadable_config_is_an_io_error() {
    let out = bin().args(["run", "--config", "/no/such/file.toml"]).output().expect("spawn");
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn test_unwritable_out_path_is_an_io_error() {
    let out = bin()
        .args([
            "run",
            "--builtin",
            "adjacent-1",
            "--devices",
            "2",
            "--seeds",
            "1",
            "--out",
            "/no/such/dir/report.json",
        ])
        .output()
        .expect("spawn");
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn test_bad_thread_env_is_a_config_error() {
    for v in ["0", "many"] {
        let out = bin()
            .env("LORA_TOW_SIM_THREADS", v)
            .args(["preset", "--list"])
            .output()
            .expect("spawn");
        assert_eq!(exit_code(&out), 2, "LORA_TOW_SIM_THREADS={v}");
    }
}

#[test]
fn test_sweep_without_an_axis_is_a_config_error() {
    let out = bin().args(["sweep", "--builtin", "ch-static"]).output().expect("spawn");
    assert_eq!(exit_code(&out), 2);
}

// ---------------------------------------------------------------------------
// Determinism
// ---------------------------------------------------------------------------

#[test]
fn test_reports_are_identical_across_worker_counts() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut bodies = Vec::new();
    for threads in ["1", "4"] {
        let path = dir.path().join(format!("report-{threads}.json"));
        let out = bin()
            .env("LORA_TOW_SIM_THREADS", threads)
            .args([
                "run",
                "--builtin",
                "adjacent-1",
                "--devices",
                "5",
                "--seeds",
                "3",
                "--master-seed",
                "7",
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .expect("spawn");
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        bodies.push(std::fs::read(&path).expect("report file"));
    }
    assert_eq!(bodies[0], bodies[1], "worker count must not affect report bytes");
}

#[test]
fn test_same_command_twice_is_byte_identical() {
    let args = [
        "run",
        "--builtin",
        "ch-dynamic",
        "--seeds",
        "2",
        "--master-seed",
        "11",
        "--format",
        "csv",
    ];
    let first = run_ok(&args);
    let second = run_ok(&args);
    assert_eq!(first.stdout, second.stdout);
}

// ---------------------------------------------------------------------------
// Output formats
// ---------------------------------------------------------------------------

#[test]
fn test_csv_header_and_field_formatting() {
    let out = run_ok(&[
        "run",
        "--builtin",
        "adjacent-1",
        "--devices",
        "4",
        "--seeds",
        "2",
        "--format",
        "csv",
    ]);
    let body = stdout_str(&out);
    let mut lines = body.lines();
    assert_eq!(
        lines.next(),
        Some("axis_value,policy,seed,attempts,successes,fsr,fairness,mean_switch_latency")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2, "one row per trial");
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 8, "row: {row}");
        assert_eq!(fields[0], "adjacent-1");
        assert_eq!(fields[1], "tow");
        // FSR and fairness carry six fractional digits; a static scenario
        // has no availability changes, so switch latency is a no-data field.
        for metric in [fields[5], fields[6]] {
            let (_, frac) = metric.split_once('.').expect("decimal point");
            assert_eq!(frac.len(), 6, "six fractional digits in {metric}");
        }
        assert_eq!(fields[7], "", "no switch latency without availability changes");
    }
}

#[test]
fn test_json_report_embeds_rerunnable_config() {
    let out = run_ok(&[
        "run",
        "--builtin",
        "adjacent-2",
        "--devices",
        "3",
        "--seeds",
        "2",
        "--master-seed",
        "5",
    ]);
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&out)).expect("json");
    assert_eq!(report["scenario"], "adjacent-2");
    assert_eq!(report["policy"], "tow");
    assert_eq!(report["master_seed"], 5);
    assert_eq!(report["trials"].as_array().map(Vec::len), Some(2));
    assert_eq!(report["seeds"].as_array().map(Vec::len), Some(2));

    // The embedded config must reproduce the exact same report when re-run.
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg_path = dir.path().join("replay.toml");
    std::fs::write(&cfg_path, report["config_toml"].as_str().expect("config_toml"))
        .expect("write config");
    let replay = run_ok(&[
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--master-seed",
        "5",
    ]);
    assert_eq!(out.stdout, replay.stdout, "replay from embedded config must be bit-exact");
}

#[test]
fn test_csv_and_json_agree_on_values() {
    let args_base = [
        "run",
        "--builtin",
        "adjacent-1",
        "--devices",
        "3",
        "--seeds",
        "1",
        "--master-seed",
        "9",
    ];
    let json_out = run_ok(&args_base);
    let report: serde_json::Value = serde_json::from_str(&stdout_str(&json_out)).expect("json");

    let mut csv_args = args_base.to_vec();
    csv_args.extend(["--format", "csv"]);
    let csv_out = run_ok(&csv_args);
    let body = stdout_str(&csv_out);
    let row = body.lines().nth(1).expect("one data row");
    let fields: Vec<&str> = row.split(',').collect();

    let trial = &report["trials"][0];
    assert_eq!(fields[2], trial["seed"].to_string());
    assert_eq!(fields[3], trial["attempts"].to_string());
    assert_eq!(fields[4], trial["successes"].to_string());
    let fsr: f64 = fields[5].parse().expect("fsr");
    assert!((fsr - trial["fsr"].as_f64().expect("fsr")).abs() < 5e-7);
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

#[test]
fn test_preset_list_names_every_builtin() {
    let out = run_ok(&["preset", "--list"]);
    let body = stdout_str(&out);
    for name in ["ch-static", "ch-dynamic", "chsf-static", "chsf-wisun", "adjacent-1", "adjacent-2"]
    {
        assert!(body.lines().any(|l| l == name), "missing {name} in:\n{body}");
    }
}

#[test]
fn test_preset_export_round_trips_through_run() {
    let exported = run_ok(&["preset", "ch-dynamic"]);
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("ch-dynamic.toml");
    std::fs::write(&path, stdout_str(&exported)).expect("write preset");

    let from_file = run_ok(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--seeds",
        "1",
        "--master-seed",
        "3",
    ]);
    let from_builtin = run_ok(&[
        "run",
        "--builtin",
        "ch-dynamic",
        "--seeds",
        "1",
        "--master-seed",
        "3",
    ]);
    assert_eq!(from_file.stdout, from_builtin.stdout);
}

// ---------------------------------------------------------------------------
// Sweep and event log
// ---------------------------------------------------------------------------

#[test]
fn test_sweep_emits_sorted_cross_product() {
    let out = run_ok(&[
        "sweep",
        "--builtin",
        "ch-static",
        "--devices",
        "5,2",
        "--policies",
        "random,tow",
        "--seeds",
        "2",
        "--format",
        "csv",
    ]);
    let body = stdout_str(&out);
    let rows: Vec<&str> = body.lines().skip(1).collect();
    assert_eq!(rows.len(), 2 * 2 * 2, "axis × policies × trials");

    // Rows are sorted by axis value, policy, seed regardless of run order.
    let keys: Vec<(String, String, u64)> = rows
        .iter()
        .map(|r| {
            let f: Vec<&str> = r.split(',').collect();
            (f[0].to_string(), f[1].to_string(), f[2].parse().expect("seed"))
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(keys.iter().any(|(axis, policy, _)| axis == "2" && policy == "random"));
    assert!(keys.iter().any(|(axis, policy, _)| axis == "5" && policy == "tow"));
}

#[test]
fn test_event_log_is_json_lines_of_frames() {
    let dir = tempfile::tempdir().expect("tempdir");
    let log = dir.path().join("frames.jsonl");
    run_ok(&[
        "run",
        "--builtin",
        "adjacent-1",
        "--devices",
        "2",
        "--seeds",
        "2",
        "--event-log",
        log.to_str().unwrap(),
        "--out",
        dir.path().join("report.json").to_str().unwrap(),
    ]);

    let body = std::fs::read_to_string(Path::new(&log)).expect("event log");
    assert!(!body.is_empty());
    let mut trials_seen = std::collections::BTreeSet::new();
    for line in body.lines() {
        let frame: serde_json::Value = serde_json::from_str(line).expect("json line");
        trials_seen.insert(frame["trial"].as_u64().expect("trial"));
        assert!(frame["time_ms"].is_u64(), "line: {line}");
        assert!(frame["source"].is_u64(), "line: {line}");
        assert!(frame["channel"].is_u64(), "line: {line}");
        assert!(frame["duration_ms"].is_u64(), "line: {line}");
        assert_eq!(frame["kind"], "lora", "no interferers in this scenario: {line}");
    }
    assert_eq!(trials_seen.len(), 2, "frames from both trials");
}
