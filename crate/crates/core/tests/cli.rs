use std::process::Command;

fn qwopt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qwopt"))
}

#[test]
fn eval_prints_the_estimate() {
    let out = qwopt()
        .args(["eval", "--steps", "3", "--target", "|1>", "--axis", "up", "--noiseless", "--theta", "0,0,0,0,0,0,0,0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["cost"], 0.0);
    assert_eq!(v["exact_fidelity"], 1.0);
    assert!((v["success_probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn bad_input_exits_with_code_two() {
    let wrong_len = qwopt().args(["eval", "--steps", "3", "--target", "|1>", "--theta", "0,0"]).output().unwrap();
    assert_eq!(wrong_len.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&wrong_len.stderr).contains("expected 8 angles"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"kind": "engineer", "budgett": 10}"#).unwrap();
    let unknown = qwopt().arg("engineer").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));

    std::fs::write(&cfg, r#"{"kind": "sweep"}"#).unwrap();
    let mismatch = qwopt().arg("engineer").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(mismatch.status.code(), Some(2));

    let missing = qwopt().args(["engineer", "--config", "/nonexistent/q.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn engineer_run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eng");
    let run = qwopt()
        .args(["engineer", "--seed", "4", "--budget", "40", "--repeats", "2", "--target", "SR_1^-1", "--target", "|3>", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("4 runs written"));
    for f in ["summary.csv", "curves.csv", "metadata.json", "runs/engineer_n3_s001_r001.jsonl"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report = qwopt().arg("report").arg("--out").arg(&out).output().unwrap();
    assert!(report.status.success());
    let written = std::fs::read_to_string(out.join("curves.csv")).unwrap();
    assert_eq!(String::from_utf8(report.stdout).unwrap(), written);
}
