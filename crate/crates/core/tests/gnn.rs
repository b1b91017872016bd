mod common;

use paragraph_core::dataset::{build_dataset, split_dataset, LabelSource, SyntheticLabeler};
use paragraph_core::gnn::{checkpoint_from_bytes, checkpoint_bytes, train, TrainConfig};
use paragraph_core::par::Execution;
use paragraph_core::variantgen::{builtin_kernels, enumerate_dataset_points, ManifestEntry};

#[test]
fn gradients_match_finite_differences() {
    let mut checked = 0;
    for seed in 100..140 {
        if let Some(r) = common::gradient_check(seed) {
            assert!(r.max_rel_err <= 1e-4, "seed {seed}: {}", r.max_rel_err);
            checked += 1;
        }
        if checked == 5 {
            return;
        }
    }
    panic!("only {checked} seeds were far enough from a kink");
}

#[test]
fn short_training_lowers_error_and_is_reproducible() {
    let specs = builtin_kernels();
    let entries: Vec<_> = specs
        .iter()
        .take(3)
        .flat_map(|s| enumerate_dataset_points(s, &[64, 128], &[2, 4], &[8, 16]).unwrap())
        .map(|v| (ManifestEntry::for_variant(&v), v))
        .collect();
    let source = LabelSource::Synthetic { labeler: SyntheticLabeler::default(), seed: 1 };
    let report = build_dataset(&entries, &source, 10, Execution::Parallel).unwrap();
    assert!(report.failures.is_empty());
    let points = report.points;
    let split = split_dataset(points.len(), 3).unwrap();
    let cfg = TrainConfig { epochs: 8, hidden: 8, head1: 8, head2: 8, feat: 4, lr: 5e-3, batch: 8, ..TrainConfig::default() };
    let a = train(&points, &split, &cfg, Execution::Sequential).unwrap();
    let b = train(&points, &split, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.best.model, b.best.model);
    let first = a.curve.first().unwrap().train_rmse_ms;
    let last = a.curve.last().unwrap().train_rmse_ms;
    assert!(last < first, "{first} -> {last}");

    let back = checkpoint_from_bytes(&checkpoint_bytes(&a.best)).unwrap();
    for p in &points {
        assert_eq!(back.predict_us(&p.graph).unwrap().to_bits(), a.best.predict_us(&p.graph).unwrap().to_bits());
    }
}
