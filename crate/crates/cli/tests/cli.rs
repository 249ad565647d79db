use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_squarecb"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn small_config(dir: &Path, name: &str) -> PathBuf {
    let text = std::fs::read_to_string(config(name))
        .unwrap()
        .replace("horizon = 10000", "horizon = 50")
        .replace("seeds = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]", "seeds = [0, 1]");
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn run_writes_ledgers_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "finite_theorem1.toml");
    let out = dir.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["horizon"], 50);
    assert!(out.join("ledger_seed_0.csv").exists());
    assert!(out.join("ledger_seed_1.csv").exists());
    assert!(out.join("summary.json").exists());
}

#[test]
fn report_compares_two_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for name in ["finite_theorem1.toml", "finite_egreedy.toml"] {
        let cfg = small_config(dir.path(), name);
        let out = dir.path().join(name.trim_end_matches(".toml"));
        let o = run(&["--threads", "2", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        summaries.push(out.join("summary.json"));
    }
    let csv = dir.path().join("table.csv");
    let o = run(&[
        "report",
        summaries[0].to_str().unwrap(),
        summaries[1].to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("mean_regret"));
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 3);
}

#[test]
fn verify_minimax_emits_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = run(&[
        "verify-minimax",
        "--config",
        config("certificate.toml").to_str().unwrap(),
        "--trials",
        "20000",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(report["trials"], 20000);
    assert!(report["max_objective"].as_f64().unwrap() > 0.0);
    assert_eq!(report["certificate"]["holds"], true);
    assert!(report["violations"].as_array().unwrap().is_empty());

    let o = run(&["verify-minimax", "--trials", "1000", "--mu-factor", "2"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["certificate"]["violation_count"], 0);
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Missing config file.
    let o = run(&["run", "--config", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(7));
    // Wrong schema version.
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(config("finite_theorem1.toml")).unwrap();
    std::fs::write(&bad, text.replace("schema_version = 1", "schema_version = 2")).unwrap();
    let o = run(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    // Unparseable summary.
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{").unwrap();
    assert_eq!(run(&["report", junk.to_str().unwrap()]).status.code(), Some(3));
    // Clap usage error.
    assert_eq!(run(&["report"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}
