use std::process::Command;

fn trail() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trail"))
}

fn scenario(name: &str) -> String {
    format!("{}/scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let status = trail()
        .args([
            "run",
            "--scenario",
            &scenario("flat"),
            "--method",
            "trail",
            "--trials",
            "2",
            "--seed",
            "3",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    for f in [
        "metrics.csv",
        "metrics.json",
        "rollout_0.csv",
        "rollout_1.csv",
        "plot_0.json",
        "plot_1.json",
        "trace_0.csv",
    ] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(json["trials"].as_array().unwrap().len(), 2);
    assert_eq!(json["trials"][1]["seed"], 4);
}

#[test]
fn no_path_at_start_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = trail()
        .args([
            "run",
            "--scenario",
            &scenario("blocked"),
            "--method",
            "trail",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(dir.path().join("metrics.csv").is_file());
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema": "trail-scenario/1"}"#).unwrap();
    let out = trail()
        .args(["run", "--method", "trail", "--scenario"])
        .arg(&bad)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid configuration"));
    let out = trail()
        .args([
            "run",
            "--scenario",
            &scenario("flat"),
            "--method",
            "mppi-warp",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn gradcheck_and_bench_report() {
    let out = trail().arg("gradcheck").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
    let out = trail().args(["bench", "--repeats", "3"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("A*") && text.contains("MPC") && text.contains("objective"));
}
