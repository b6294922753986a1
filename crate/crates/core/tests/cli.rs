use std::path::{Path, PathBuf};

use medledger::cli;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["medledger"];
    argv.extend_from_slice(args);
    let code = cli::main_with_args(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn quick_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(
        &path,
        r#"{"pipeline": {"difficulty": 4, "epochs": 2, "vae_epochs": 1, "lstm_hidden": 8},
            "dataset": {"synthetic_rows": 600}}"#,
    )
    .unwrap();
    path
}

fn only_subdir(dir: &Path) -> PathBuf {
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect();
    assert_eq!(entries.len(), 1);
    entries.pop().unwrap()
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let (code, _, err) = run(&[]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(run(&["simulate", "--frobnicate"]).0, 2);
    assert_eq!(run(&["sweep", "--aps", "x"]).0, 2);
}

#[test]
fn help_succeeds() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    for sub in ["ingest", "train-vae", "train-lstm", "detect", "simulate", "sweep", "verify-chain", "bench"] {
        assert!(out.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn simulate_is_reproducible_and_verifiable() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let cfg = cfg.to_str().unwrap();
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let (code, _, err) = run(&["simulate", "--config", cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        let dir = only_subdir(&out);
        reports.push(std::fs::read(dir.join("report.json")).unwrap());

        let (code, stdout, _) = run(&["verify-chain", dir.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(stdout.contains("OK"), "{stdout}");
    }
    assert_eq!(reports[0], reports[1]);

    let dir = only_subdir(&tmp.path().join("a"));
    let chain = dir.join("chain.jsonl");
    let text = std::fs::read_to_string(&chain).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut block: serde_json::Value = serde_json::from_str(&lines[1]).unwrap();
    block["proof"] = serde_json::json!(block["proof"].as_u64().unwrap() + 1);
    lines[1] = block.to_string();
    std::fs::write(&chain, lines.join("\n") + "\n").unwrap();
    let (code, _, err) = run(&["verify-chain", chain.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains("verification failed"));
}

#[test]
fn json_output_parses() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config(tmp.path());
    let (code, out, err) = run(&[
        "ingest",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str::<serde_json::Value>(&out).unwrap();
}

#[test]
fn missing_config_is_a_runtime_error() {
    let (code, _, err) = run(&["simulate", "--config", "/nonexistent/config.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("error"));
}
