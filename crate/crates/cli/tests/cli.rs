use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paragraph"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn error_record(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has an error record");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON: {line}: {e}"))
}

#[test]
fn graph_matches_golden_fixture() {
    let snippets = fixtures().join("snippets.c");
    let out = run(&["graph", snippets.to_str().unwrap(), "--threads", "1", "--teams", "1"]);
    assert!(out.status.success());
    let got: Value = serde_json::from_slice(&out.stdout).unwrap();
    let want: Value = serde_json::from_str(&fs::read_to_string(fixtures().join("snippets.graph.json")).unwrap()).unwrap();
    assert_eq!(got, want);
}

#[test]
fn exit_codes_and_error_records() {
    let out = run(&["graph", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(error_record(&out)["error"]["code"], 1);

    let out = run(&["graph", "/definitely/missing.c"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["error"]["kind"], "input");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.c");
    fs::write(&bad, "void k() { x = 1; }").unwrap();
    let out = run(&["parse", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_record(&out)["error"]["message"].as_str().unwrap().contains("undeclared"));

    // Every measurement fails: a stage failure.
    let variants = dir.path().join("v");
    let kernel = fixtures().join("matmul/kernel.json");
    let ok = run(&["variants", kernel.to_str().unwrap(), "--sizes", "8", "--teams", "2", "--threads", "2", "-o", variants.to_str().unwrap()]);
    assert!(ok.status.success());
    let exec = dir.path().join("exec.json");
    fs::write(&exec, r#"{"compile": "exit 1", "run": "true", "timeout_s": 5}"#).unwrap();
    let out = run(&["dataset", "build", "--variants", variants.to_str().unwrap(), "--executor", exec.to_str().unwrap(), "-o", dir.path().join("d.jsonl").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_record(&out)["error"]["kind"], "stage");

    assert!(run(&["--help"]).status.success());
}

#[test]
fn stages_chain_and_repeat_identically() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let ok = |args: &[&str]| {
        let out = run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    ok(&["variants", "--builtin", "--sizes", "16,32", "--teams", "2", "--threads", "2,4", "-o", &p("v")]);
    let built = ok(&["--json", "dataset", "build", "--variants", &p("v"), "--synthetic", "4", "--exclude", "laplace", "-o", &p("d.jsonl")]);
    let built: Value = serde_json::from_slice(&built.stdout).unwrap();
    assert!(built["points"].as_u64().unwrap() > 100);
    fs::write(p("cfg.json"), r#"{"epochs": 3, "hidden": 8, "head1": 8, "head2": 4, "feat": 4, "lr": 0.003}"#).unwrap();
    for run_id in ["1", "2"] {
        ok(&["--jobs", run_id, "train", &p("d.jsonl"), "--config", &p("cfg.json"), "-o", &p(&format!("m{run_id}.ckpt"))]);
    }
    assert_eq!(fs::read(p("m1.ckpt")).unwrap(), fs::read(p("m2.ckpt")).unwrap());
    ok(&["eval", &p("m1.ckpt"), &p("d.jsonl"), "-o", &p("r.json"), "--csv", &p("r.csv")]);
    let report: Value = serde_json::from_str(&fs::read_to_string(p("r.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["bins"].as_array().unwrap().len(), 11);
    assert!(report["per_app"].get("laplace").is_none());
    assert_eq!(fs::read_to_string(p("r.csv")).unwrap().lines().count(), 12);

    let snippets = fixtures().join("snippets.c");
    ok(&["graph", snippets.to_str().unwrap(), "-o", &p("g.json")]);
    let pred = ok(&["--json", "predict", &p("m1.ckpt"), &p("g.json"), "--teams", "4", "--threads", "64"]);
    let pred: Value = serde_json::from_slice(&pred.stdout).unwrap();
    assert!(pred["predicted_ms"].as_f64().unwrap().is_finite());
    let human = ok(&["predict", &p("m1.ckpt"), &p("g.json"), "--teams", "4", "--threads", "64"]);
    assert!(String::from_utf8_lossy(&human.stdout).trim_end().ends_with(" ms"));

    ok(&["ablate", &p("d.jsonl"), "--config", &p("cfg.json"), "-o", &p("a.json")]);
    let table: Value = serde_json::from_str(&fs::read_to_string(p("a.json")).unwrap()).unwrap();
    let modes: Vec<_> = table["rows"].as_array().unwrap().iter().map(|r| r["mode"].as_str().unwrap().to_string()).collect();
    assert_eq!(modes, ["raw", "aug", "para"]);
}

#[test]
fn pipeline_from_one_config() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = fixtures().join("matmul/kernel.json");
    let cfg = serde_json::json!({
        "output_dir": "out",
        "kernels": [kernel],
        "sizes": [8, 16, 24],
        "teams": [2, 4],
        "threads": [2, 4],
        "labels": { "synthetic": { "seed": 1 } },
        "train": { "epochs": 2, "hidden": 6, "head1": 6, "head2": 4, "feat": 2 }
    });
    let path = dir.path().join("pipeline.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let out = run(&["--json", "--seed", "3", "pipeline", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["points"], 60);
    for f in ["dataset.jsonl", "split.json", "model.ckpt", "curve.json", "predictions.json", "report.json", "report.csv", "variants/manifest.json"] {
        assert!(dir.path().join("out").join(f).is_file(), "{f}");
    }

    fs::write(&path, r#"{"output_dir": "x", "sizes": [], "teams": [1], "threads": [1], "labels": {"synthetic": {}}}"#).unwrap();
    let out = run(&["pipeline", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
