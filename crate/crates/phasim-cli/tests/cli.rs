//! End-to-end tests of the command-line binary: exit codes, output formats,
//! determinism, and the documented result values on known instances.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::{Command, Output};

fn phasim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasim"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed ({:?}): {}",
        out.status.code(),
        stderr_of(out)
    );
}

/// Parses `name,value` CSV (the flattened document format) into a map.
fn csv_values(text: &str) -> HashMap<String, String> {
    let mut rows = HashMap::new();
    for line in text.lines().skip(1) {
        if let Some((name, value)) = line.split_once(',') {
            rows.insert(name.to_string(), value.to_string());
        }
    }
    rows
}

fn workdir(label: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("phasim-cli-{label}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}

fn write_file(dir: &std::path::Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).expect("write temp file");
    path
}

fn experiment_config(replications: u32) -> String {
    format!(
        r#"{{
  "policies": [
    {{"kind": "fractional_lcfs", "beta": 1.0, "theta": 0.25}},
    {{"kind": "pa_fcfs"}}
  ],
  "servers": 4.0,
  "alpha": 2.0,
  "workload": {{
    "type": "stochastic",
    "arrival_rate": 2.0,
    "horizon_slots": 10,
    "mean_phases": 3.0,
    "mean_phase_size": 1.0,
    "first_phase": "random_equal",
    "seed": 1
  }},
  "replications": {replications},
  "base_seed": 7
}}
"#
    )
}

#[test]
fn bounds_reports_the_reference_parameter_point() {
    let beta = format!("{}", 1.0 / 6.0);
    let theta = format!("{}", 1.0 / 72.0);
    let out = phasim(&[
        "--format",
        "json",
        "bounds",
        "--alpha",
        "2",
        "--beta",
        &beta,
        "--theta",
        &theta,
        "--gamma",
        &theta,
    ]);
    assert_success(&out);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json output");
    let bound = &doc["recency_bound"];
    assert_eq!(bound["feasible"], serde_json::Value::Bool(true));
    let kappa = bound["kappa"].as_f64().expect("kappa present");
    let expected = 629.8619574858278;
    assert!(
        (kappa - expected).abs() <= 1e-9 * expected,
        "kappa drifted: {kappa}"
    );
    assert!(doc["recency_conditions"]["all_satisfied"]
        .as_bool()
        .unwrap());
}

#[test]
fn bounds_csv_flattening_exposes_dotted_paths() {
    let beta = format!("{}", 1.0 / 6.0);
    let out = phasim(&["bounds", "--alpha", "2", "--beta", &beta]);
    assert_success(&out);
    let text = stdout_of(&out);
    assert!(text.starts_with("name,value\n"));
    let rows = csv_values(&text);
    let kappa: f64 = rows
        .get("recency_bound.kappa")
        .expect("flattened kappa row")
        .parse()
        .expect("numeric kappa");
    assert!(kappa > 1.0 && kappa.is_finite());
}

#[test]
fn invalid_parameters_exit_with_code_one() {
    let out = phasim(&["bounds", "--alpha", "0.5", "--search-beta"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("error"));

    // Asking for nothing is also a usage error.
    let out = phasim(&["bounds", "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(1));

    // simulate without a config cannot run.
    let out = phasim(&["simulate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_path_exits_with_code_two() {
    let out = phasim(&[
        "--out",
        "/nonexistent-dir-for-phasim-test/data.json",
        "bounds",
        "--alpha",
        "2",
        "--delta",
        "0.25",
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn simulate_is_deterministic_and_emits_the_documented_header() {
    let dir = workdir("simulate");
    let config = write_file(&dir, "config.json", &experiment_config(3));
    let first = dir.join("run1.csv");
    let second = dir.join("run2.csv");

    for path in [&first, &second] {
        let out = phasim(&[
            "--config",
            config.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
            "simulate",
        ]);
        assert_success(&out);
    }

    let bytes1 = std::fs::read(&first).unwrap();
    let bytes2 = std::fs::read(&second).unwrap();
    assert_eq!(bytes1, bytes2, "reruns must be byte-identical");

    let text = String::from_utf8(bytes1).unwrap();
    let header = text.lines().next().expect("non-empty output");
    assert_eq!(
        header,
        "policy,beta,theta,delta,alpha,servers,arrival_rate,replications,\
         jobs_total,mean_flow_time,stddev,ci95,pooled_mean"
            .replace(' ', "")
    );
    // One data row per configured policy.
    assert_eq!(text.lines().count(), 3);

    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn simulate_rejects_a_zero_replication_config() {
    let dir = workdir("zero-reps");
    let config = write_file(&dir, "config.json", &experiment_config(0));
    let out = phasim(&["--config", config.to_str().unwrap(), "simulate"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_emits_one_row_per_policy_and_value() {
    let dir = workdir("sweep");
    let config = write_file(&dir, "config.json", &experiment_config(2));
    let out = phasim(&[
        "--config",
        config.to_str().unwrap(),
        "sweep",
        "--dimension",
        "arrival_rate",
        "--values",
        "1,2",
    ]);
    assert_success(&out);
    let text = stdout_of(&out);
    // Header plus 2 policies × 2 swept values.
    assert_eq!(text.lines().count(), 5, "output was:\n{text}");
    let swept: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap())
        .collect();
    assert_eq!(swept, ["1", "1", "2", "2"]);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn verify_time_zero_reports_passing_checks() {
    let out = phasim(&[
        "--format",
        "json",
        "verify",
        "--case",
        "time_zero",
        "--arrival-rate",
        "1.5",
        "--slots",
        "6",
    ]);
    assert_success(&out);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json output");
    assert_eq!(doc["case"], "time_zero");
    assert_eq!(doc["c1"].as_f64().unwrap(), 4.0);
    assert_eq!(doc["c2"].as_f64().unwrap(), 12.0);
    assert_eq!(doc["jumps"]["pass"], serde_json::Value::Bool(true));
    assert_eq!(doc["drifts"]["pass"], serde_json::Value::Bool(true));
    assert!(doc["jumps"]["events"].as_u64().unwrap() > 0);
}

#[test]
fn verify_online_reports_passing_checks() {
    let out = phasim(&[
        "--format",
        "json",
        "verify",
        "--case",
        "online",
        "--comparison",
        "pa_fcfs",
        "--arrival-rate",
        "1.5",
        "--slots",
        "8",
    ]);
    assert_success(&out);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("json output");
    assert_eq!(doc["case"], "online");
    assert_eq!(doc["jumps"]["pass"], serde_json::Value::Bool(true));
    assert_eq!(doc["drifts"]["pass"], serde_json::Value::Bool(true));
}

#[test]
fn oracle_reports_the_exact_single_job_optimum() {
    let dir = workdir("oracle");
    let fixture = write_file(
        &dir,
        "single.json",
        r#"{"jobs": [{"id": 0, "arrival": 0.0, "phases": [{"kind": "elastic", "size": 4.0}]}]}"#,
    );
    let out = phasim(&[
        "oracle",
        "--workload",
        fixture.to_str().unwrap(),
        "--servers",
        "4",
        "--grid",
        "0.5",
        "--dt",
        "0.25",
        "--policy",
        "pa_equi",
    ]);
    assert_success(&out);
    let rows = csv_values(&stdout_of(&out));
    let value = |name: &str| -> f64 {
        rows.get(name)
            .unwrap_or_else(|| panic!("missing row {name}"))
            .parse()
            .expect("numeric value")
    };
    assert_eq!(value("jobs"), 1.0);
    assert!((value("flow_time") - 2.0).abs() < 1e-9);
    assert!((value("lower_bound") - 2.0).abs() < 1e-9);
    assert!(value("slack").abs() < 1e-12);
    assert!((value("policy_flow_time") - 2.0).abs() < 1e-9);
    assert!((value("ratio_vs_lower_bound") - 1.0).abs() < 1e-9);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn oracle_rejects_oversized_instances_with_code_one() {
    let dir = workdir("oracle-too-big");
    let jobs: Vec<String> = (0..4)
        .map(|i| {
            format!(
                r#"{{"id": {i}, "arrival": 0.0, "phases": [{{"kind": "elastic", "size": 1.0}}]}}"#
            )
        })
        .collect();
    let fixture = write_file(
        &dir,
        "four.json",
        &format!(r#"{{"jobs": [{}]}}"#, jobs.join(",")),
    );
    let out = phasim(&[
        "oracle",
        "--workload",
        fixture.to_str().unwrap(),
        "--servers",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    let _ = std::fs::remove_dir_all(&dir);
}
