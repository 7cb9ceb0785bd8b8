use std::path::PathBuf;
use std::process::Command;

fn fixture(name: &str, file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .join(file)
}

fn pog() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pog"))
}

fn run_fixture(name: &str, extra: &[&str], out: &std::path::Path) -> std::process::Output {
    pog()
        .arg("run")
        .arg("--dataset")
        .arg(fixture(name, "dataset.jsonl"))
        .arg("--kg")
        .arg(fixture(name, "kg.tsv"))
        .arg("--labels")
        .arg(fixture(name, "labels.tsv"))
        .arg("--llm")
        .arg(format!("mock:{}", fixture(name, "script.json").display()))
        .arg("--config")
        .arg(fixture(name, "config.json"))
        .arg("--gold-topics")
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn run_writes_metrics_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let dumps = dir.path().join("subgraphs");
    let out = run_fixture("lou_seal", &["--dump-subgraphs", dumps.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("hits@1 1.0000"), "{stdout}");

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["hits_at_1"], 1.0);
    assert_eq!(metrics["total_llm_calls"], 4);
    assert_eq!(metrics["questions"][0]["answer"], "2014 World Series");
    let trace: serde_json::Value = serde_json::from_str(
        std::fs::read_to_string(dir.path().join("traces.jsonl")).unwrap().lines().next().unwrap(),
    )
    .unwrap();
    assert_eq!(trace["phase"], "topic");
    assert!(dumps.join("lou_seal.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run_fixture("final_fallback", &["--seed", "3"], dir.path());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("metrics.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn flags_override_the_config_file() {
    let out = pog()
        .args(["config", "--strategy", "fuzzy-branch", "--dmax", "4", "--wmax", "5", "--pog-e"])
        .arg("--config")
        .arg(fixture("lou_seal", "config.json"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let config: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(config["strategy"], "fuzzy-branch");
    assert_eq!(config["d_max"], 4);
    assert_eq!(config["widths"]["w_max"], 5);
    assert_eq!(config["pog_e"], true);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = pog()
        .arg("run")
        .arg("--dataset")
        .arg(fixture("lou_seal", "dataset.jsonl"))
        .arg("--kg")
        .arg(fixture("lou_seal", "kg.tsv"))
        .args(["--llm", "carrier-pigeon"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--llm must be"));

    let out = pog().args(["config", "--wmax", "0"]).output().unwrap();
    assert!(!out.status.success());
}
