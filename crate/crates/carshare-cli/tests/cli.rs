//! End-to-end tests driving the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

fn carshare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carshare"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn code_of(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

#[test]
fn solve_fig1_combined_reports_the_worst_case() {
    let out = carshare(&[
        "solve", "fig1", "--alg", "ca", "--alpha", "1", "--flavor", "u", "--objective", "sum",
        "--ties", "adversarial",
    ]);
    assert_eq!(code_of(&out), 0);
    let record: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
    assert_eq!(record["objective_value"], 4.0);
    assert_eq!(record["command"], "solve");
}

#[test]
fn solve_fig3_combined_latency_reports_twelve() {
    let out = carshare(&[
        "solve", "fig3", "--alg", "ca", "--alpha", "2", "--flavor", "mu", "--objective", "lat",
        "--ties", "adversarial",
    ]);
    assert_eq!(code_of(&out), 0);
    let record: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
    assert_eq!(record["objective_value"], 12.0);
}

#[test]
fn solve_output_is_reproducible_modulo_timing() {
    let args = [
        "solve", "fig2", "--alg", "ma", "--alpha", "1", "--flavor", "u", "--objective", "sum",
        "--ties", "adversarial",
    ];
    let mut records: Vec<serde_json::Value> = Vec::new();
    for _ in 0..2 {
        let out = carshare(&args);
        assert_eq!(code_of(&out), 0);
        let mut record: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
        record.as_object_mut().unwrap().remove("elapsed_ms");
        records.push(record);
    }
    assert_eq!(records[0], records[1]);
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let out = carshare(&["solve", "fig1", "--alg", "nonsense"]);
    assert_eq!(code_of(&out), 2);
}

#[test]
fn bad_alpha_is_a_usage_error() {
    let out = carshare(&["solve", "fig1", "--alg", "ma", "--alpha", "3"]);
    assert_eq!(code_of(&out), 2);
}

#[test]
fn missing_instance_file_is_a_usage_error() {
    let out = carshare(&["solve", "/nonexistent/path.json", "--alg", "ma"]);
    assert_eq!(code_of(&out), 2);
}

#[test]
fn verify_paper_passes_and_prints_the_ratio_lines() {
    let out = carshare(&["verify-paper"]);
    assert_eq!(code_of(&out), 0);
    let stdout = stdout_of(&out);
    assert!(stdout.contains("fig2 CA(1,u): 14/10"), "missing ratio line in:\n{stdout}");
    assert!(stdout.contains("fig3 CA(2,mu): 12/8"));
    assert!(!stdout.contains("[FAIL]"));
}

#[test]
fn sweep_writes_json_lines_and_respects_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let out = carshare(&[
        "sweep", "--count", "5", "--n", "2", "--mode", "st", "--seed", "42", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 0);
    let body = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 5 * 12);
    for line in &lines {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(record["within_bound"], true);
        assert_eq!(record["s_equals_t"], true);
    }
}

#[test]
fn sweeps_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.jsonl");
    let second = dir.path().join("b.jsonl");
    for path in [&first, &second] {
        let out = carshare(&[
            "sweep", "--count", "4", "--n", "3", "--seed", "7", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code_of(&out), 0);
    }
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}

#[test]
fn generalized_sweep_checks_the_generalized_bounds() {
    let out = carshare(&["sweep", "--count", "3", "--n", "2", "--a", "3", "--seed", "9"]);
    assert_eq!(code_of(&out), 0);
    let stdout = stdout_of(&out);
    assert!(stdout.contains("TA(3)-sum"));
    assert!(stdout.contains("TA(3)-lat"));
}

#[test]
fn empty_sweep_writes_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.jsonl");
    let out = carshare(&["sweep", "--count", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 0);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
}

#[test]
fn gen_then_solve_and_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.json");
    let out = carshare(&[
        "gen", "--n", "2", "--a", "3", "--mode", "general", "--seed", "11", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 0);

    let solve = carshare(&[
        "solve",
        path.to_str().unwrap(),
        "--alg",
        "ta-gen-sum",
        "--a",
        "3",
    ]);
    assert_eq!(code_of(&solve), 0, "{}", String::from_utf8_lossy(&solve.stderr));
    let record: serde_json::Value = serde_json::from_str(stdout_of(&solve).trim()).unwrap();
    assert!(record["v3_m3"].is_number());

    let validate = carshare(&["validate", path.to_str().unwrap()]);
    assert_eq!(code_of(&validate), 0);
}

#[test]
fn validate_flags_metric_violations_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    write_broken_instance(&path);
    let out = carshare(&["validate", path.to_str().unwrap()]);
    assert_eq!(code_of(&out), 1);
    let record: serde_json::Value = serde_json::from_str(stdout_of(&out).trim()).unwrap();
    assert_eq!(record["valid"], false);
}

fn write_broken_instance(path: &Path) {
    let doc = serde_json::json!({
        "locations": 3,
        "distances": [[0.0, 1.0, 10.0], [1.0, 0.0, 1.0], [10.0, 1.0, 0.0]],
        "cars": [{"location": 0}],
        "requests": [{"pickup": 1, "dropoff": 1}, {"pickup": 2, "dropoff": 2}],
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
}

#[test]
fn corrupt_files_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corrupt.json");
    std::fs::write(&path, "{ not json").unwrap();
    for command in [&["solve", path.to_str().unwrap(), "--alg", "ma"][..], &["validate", path.to_str().unwrap()][..]] {
        let out = carshare(command);
        assert_eq!(code_of(&out), 2);
    }
}
