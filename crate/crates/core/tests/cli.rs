use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_containment"))
}

#[test]
fn list_includes_builtins() {
    let out = bin().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("paper-continuous-example"));
    assert!(text.contains("paper-robot-application"));
}

#[test]
fn run_writes_trace_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "discrete-pin-example", "--horizon", "60", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("discrete-pin-example.trace.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "t,agent,role,x1,x2,hull_distance,containment_error,estimator_error");
    // 61 samples × 6 agents plus header
    assert_eq!(csv.lines().count(), 61 * 6 + 1);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("discrete-pin-example.report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["schema_version"], 1);
}

#[test]
fn synth_prints_audit() {
    let out = bin().args(["synth", "continuous-pin-example"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["gains_source"], "synthesized");
    assert_eq!(v["gains"].as_array().unwrap().len(), 3);
}

#[test]
fn explicit_gain_file_and_bad_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let gains = dir.path().join("k.json");
    std::fs::write(&gains, "[1.0, 2.0]").unwrap();
    let out = bin().args(["synth", "continuous-pin-example", "--gains"]).arg(&gains).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["run", "no-such-scenario"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_reports_unreachable_followers() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value =
        serde_json::from_str(&containment::harness::builtin("discrete-pin-example").unwrap().to_json()).unwrap();
    let edges = v["topology"]["edges"].as_array_mut().unwrap();
    edges.retain(|e| e[1] != 6);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, v.to_string()).unwrap();
    assert_eq!(bin().arg("verify").arg(&path).output().unwrap().status.code(), Some(2));
    let out = bin().arg("verify").arg(&path).arg("--allow-unreachable").output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("followers [6]"));
    assert!(bin().args(["verify", "discrete-pin-example"]).output().unwrap().status.success());
}
