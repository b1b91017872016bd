use std::process::Command;

use paragraph_core::dataset::{
    build_dataset, exclude_apps, read_jsonl, write_jsonl, ExecutorConfig, LabelSource, Stage, SyntheticLabeler,
};
use paragraph_core::par::Execution;
use paragraph_core::variantgen::{builtin_kernels, enumerate_dataset_points, read_manifest, write_variants};

fn manifest_dir(kernel: &str, sizes: &[i64]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let spec = builtin_kernels().into_iter().find(|k| k.kernel_name == kernel).unwrap();
    let variants = enumerate_dataset_points(&spec, sizes, &[2], &[2]).unwrap();
    write_variants(dir.path(), &[(spec, variants)]).unwrap();
    dir
}

fn executor(compile: &str, run: &str, timeout_s: u64) -> ExecutorConfig {
    ExecutorConfig { compile: compile.into(), run: run.into(), timeout_s, retries: 0, platform: "test".into() }
}

fn measured(dir: &tempfile::TempDir, cfg: ExecutorConfig) -> LabelSource {
    LabelSource::Measured { config: cfg, variants_dir: dir.path().to_path_buf(), work_dir: dir.path().join("build") }
}

#[test]
fn marker_from_a_fake_run_becomes_the_label() {
    let dir = manifest_dir("vecadd", &[16]);
    let entries = read_manifest(dir.path()).unwrap();
    let src = measured(&dir, executor("true", "echo warmup; echo KERNEL_TIME_US={threads}5.5", 10));
    let report = build_dataset(&entries, &src, 10, Execution::Parallel).unwrap();
    assert!(report.failures.is_empty());
    assert_eq!(report.points.len(), entries.len());
    assert!(report.points.iter().all(|p| p.runtime_us == 25.5 && p.platform_tag == "test"));
}

#[test]
fn failures_are_reported_not_defaulted() {
    let dir = manifest_dir("vecadd", &[16]);
    let entries = read_manifest(dir.path()).unwrap();
    let cases = [
        (executor("exit 4", "true", 10), Stage::Compile),
        (executor("true", "echo oops >&2; exit 1", 10), Stage::Run),
        (executor("true", "echo no marker here", 10), Stage::Parse),
        (executor("true", "echo KERNEL_TIME_US=0", 10), Stage::Parse),
        (executor("", "sleep 5", 1), Stage::Timeout),
    ];
    for (cfg, stage) in cases {
        let report = build_dataset(&entries[..1], &measured(&dir, cfg), 10, Execution::Sequential).unwrap();
        assert!(report.points.is_empty());
        assert_eq!(report.failures.len(), 1);
        assert_eq!(report.failures[0].stage, stage, "{}", report.failures[0]);
    }
    let report = build_dataset(&entries[..1], &measured(&dir, executor("true", "echo oops >&2; exit 1", 10)), 10, Execution::Sequential).unwrap();
    assert!(report.failures[0].stderr.contains("oops"));
}

#[test]
fn real_harness_compiles_and_times() {
    if Command::new("gcc").arg("--version").output().is_err() {
        eprintln!("gcc not found; skipping");
        return;
    }
    let dir = manifest_dir("matvec", &[24]);
    let entries = read_manifest(dir.path()).unwrap();
    let cpu: Vec<_> = entries.into_iter().filter(|(e, _)| !e.kind.is_gpu()).collect();
    let cfg = executor("gcc -O1 -fopenmp {src} -o {bin} -lm", "{bin}", 120);
    let report = build_dataset(&cpu, &measured(&dir, cfg), 10, Execution::Sequential).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert!(report.points.iter().all(|p| p.runtime_us > 0.0));
}

#[test]
fn jsonl_round_trip_and_exclusion() {
    let dir = manifest_dir("jacobi", &[8, 16]);
    let entries = read_manifest(dir.path()).unwrap();
    let src = LabelSource::Synthetic { labeler: SyntheticLabeler::default().with_sigma(0.1), seed: 3 };
    let a = build_dataset(&entries, &src, 10, Execution::Parallel).unwrap().points;
    let b = build_dataset(&entries, &src, 10, Execution::Sequential).unwrap().points;
    assert_eq!(a, b);
    let path = dir.path().join("data.jsonl");
    write_jsonl(&path, &a).unwrap();
    let back = read_jsonl(&path).unwrap();
    assert_eq!(back, a);
    assert!(exclude_apps(back, &["jacobi".to_string()]).is_empty());

    std::fs::write(&path, "{\"schema_version\": 1}\n").unwrap();
    let err = read_jsonl(&path).unwrap_err().to_string();
    assert!(err.contains(":1:"), "{err}");
}
