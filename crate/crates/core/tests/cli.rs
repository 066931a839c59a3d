//! End-to-end runs of the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use betasched::domain::{rat, Instance, Job, JobType, Parameters, Prediction, PredictionModel};
use betasched::io::write_instance;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betasched")).args(args).output().expect("binary runs")
}

fn nine_job_file(dir: &Path) -> String {
    let params = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
    let m = PredictionModel::new(rat(1, 10), rat(1, 10), rat(1, 10)).unwrap();
    let truth = [0u8, 1, 0, 0, 1, 1, 1, 0, 1];
    let jobs = (0..9)
        .map(|i| {
            let label = if i < 5 { JobType::Urgent } else { JobType::NonUrgent };
            Job::new(i + 1, JobType::from_index(truth[i]).unwrap(), Prediction::Label(label))
        })
        .collect();
    let path = dir.join("nine.csv");
    fs::write(&path, write_instance(&Instance::new(jobs, params, Some(m)).unwrap())).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let out = dir.path().join(name);
        let o = bin(&["sweep", "--eps-grid", "0:0.5:0.25", "--n", "20", "--reps", "300", "--seed", "9", "--cr", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.starts_with("# command=sweep"));
    // One opt row plus four policies at each of three points.
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3 * 5);
}

#[test]
fn arrivals_json_reruns_are_byte_identical() {
    let args = ["arrivals", "--eps-grid", "0,0.1", "--n", "15", "--reps", "200", "--format", "json"];
    let a = bin(&args);
    let b = bin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2 * 4);
}

#[test]
fn run_one_prints_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let file = nine_job_file(dir.path());
    let o = bin(&["run-one", "--instance", &file]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# policy=beta cost=1637/5 preemptions=2\n"), "{text}");
    assert!(text.contains("7/5,preempt,2,1\n"));
    let o = bin(&["run-one", "--instance", &file, "--policy", "nonpreemptive"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("cost=349/1"));
}

#[test]
fn verify_passes_and_catches_an_injected_fault() {
    let ok = bin(&["verify", "--instances", "200"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(!String::from_utf8(ok.stdout).unwrap().contains("FAIL"));

    let bad = bin(&["verify", "--instances", "50", "--inject-beta-offset", "1/1000"]);
    assert_eq!(bad.status.code(), Some(1));
    let text = String::from_utf8(bad.stdout).unwrap();
    assert!(text.contains("FAIL threshold-rule optimality"), "{text}");
}

#[test]
fn oracle_size_limit_is_a_clean_error() {
    let o = bin(&["verify", "--max-n", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("resource limit"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "alpha = 7/10\nn = 12\nreps = 50\neps_grid = 0\nformat = json\n").unwrap();
    let o = bin(&["sweep", "--config", cfg.to_str().unwrap(), "--n", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let row = &doc["rows"][0];
    assert_eq!(row["alpha"], "7/10");
    assert_eq!(row["n"], "8");
}

#[test]
fn bad_input_exits_with_usage_error() {
    assert_eq!(bin(&["sweep", "--eps-grid", "0.6", "--reps", "1"]).status.code(), Some(2));
    assert_eq!(bin(&["sweep", "--interarrival", "1", "--reps", "1"]).status.code(), Some(2));
    assert_eq!(bin(&["run-one", "--instance", "/nonexistent/file"]).status.code(), Some(2));
}
