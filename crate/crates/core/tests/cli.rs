use std::process::Command;

use csdlma::fairness::Alpha;
use csdlma::harness::Summary;

const TINY: &str = r#"
alpha = 1.0
steps = 120
seeds = [1, 2]
log_every = 40

[hyperparams]
history_len = 3
hidden = 4
batch_size = 4

[[node]]
kind = "tdma"
frame_len = 5
occupied_slots = [2, 5]
slot_len = 10

[[node]]
kind = "aloha"
q = 0.5
slot_len = 10
"#;

fn csdlma() -> Command {
    Command::new(env!("CARGO_BIN_EXE_csdlma"))
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("tiny.toml");
    std::fs::write(&scenario, TINY).unwrap();
    let out = dir.path().join("out");
    let status = csdlma()
        .args(["run", scenario.to_str().unwrap(), "--alpha", "0", "--steps", "90", "--window", "30"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert!(csv.starts_with("run_id,step,minislots,node_id,cum_throughput,epsilon\n"));
    // 2 runs × 3 snapshots × 3 nodes.
    assert_eq!(csv.lines().count(), 1 + 18);
    let summary = Summary::from_json(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.config.steps, 90);
    assert_eq!(summary.config.alpha, Alpha::SUM_THROUGHPUT);
    assert_eq!(summary.runs, 2);
    assert_eq!(summary.nodes.len(), 3);
    assert!(summary.oracle.is_some());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("tiny.toml");
    std::fs::write(&scenario, TINY).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("out{k}"));
        let s = csdlma()
            .args(["run", scenario.to_str().unwrap(), "--arch", "feedforward"])
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(s.status.success());
        outputs.push((
            std::fs::read(out.join("runs.csv")).unwrap(),
            std::fs::read(out.join("summary.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn format_selector_limits_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("tiny.toml");
    std::fs::write(&scenario, TINY).unwrap();
    let out = dir.path().join("out");
    let s = csdlma()
        .args(["run", scenario.to_str().unwrap(), "--format", "json", "--seeds", "7"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(s.status.success());
    assert!(!out.join("runs.csv").exists());
    assert!(out.join("summary.json").exists());
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let s = csdlma().args(["run", "/nonexistent/scenario.toml"]).output().unwrap();
    assert!(!s.status.success());
    assert!(String::from_utf8_lossy(&s.stderr).contains("/nonexistent/scenario.toml"));

    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("bad.toml");
    std::fs::write(&scenario, format!("{TINY}\nmystery = 1\n")).unwrap();
    let s = csdlma().args(["run", scenario.to_str().unwrap()]).output().unwrap();
    assert!(!s.status.success());
    assert!(String::from_utf8_lossy(&s.stderr).contains("mystery"));

    std::fs::write(&scenario, TINY).unwrap();
    let s = csdlma().args(["run", scenario.to_str().unwrap(), "--alpha", "-2"]).output().unwrap();
    assert!(!s.status.success());
}

#[test]
fn benchmark_prints_the_reference_table() {
    let s = csdlma().args(["benchmark", "--minislots", "100000"]).output().unwrap();
    assert!(s.status.success());
    let text = String::from_utf8(s.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "strategy,agent,tdma,aloha");
    assert!(lines[1].starts_with("greedy,"));
    assert!(lines[2].starts_with("polite,"));
    let polite: Vec<f64> = lines[2].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    for (got, want) in polite.iter().zip([0.255, 0.19, 0.285]) {
        assert!((got - want).abs() < 1e-12);
    }
    assert!(lines[3].starts_with("simulated-polite,"));
}

#[test]
fn shipped_scenarios_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            csdlma::harness::ScenarioConfig::load(&path).unwrap();
            n += 1;
        }
    }
    assert!(n >= 3);
}
