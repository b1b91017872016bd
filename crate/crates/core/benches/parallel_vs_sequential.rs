//! Sequential against data-parallel execution of the two hot loops: graph
//! construction over a manifest and the batched gradient.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use paragraph_core::dataset::{build_dataset, LabelSource, Scaler, SyntheticLabeler};
use paragraph_core::gnn::{loss_and_gradients, GraphInput, ModelConfig, RgatModel};
use paragraph_core::par::Execution;
use paragraph_core::variantgen::{builtin_kernels, enumerate_dataset_points, KernelVariant, ManifestEntry};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn entries() -> Vec<(ManifestEntry, KernelVariant)> {
    builtin_kernels()
        .iter()
        .flat_map(|s| enumerate_dataset_points(s, &[64, 256], &[4], &[16]).unwrap())
        .map(|v| (ManifestEntry::for_variant(&v), v))
        .collect()
}

fn dataset(c: &mut Criterion) {
    let entries = entries();
    let source = LabelSource::Synthetic { labeler: SyntheticLabeler::default(), seed: 0 };
    let mut group = c.benchmark_group("build_dataset");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| build_dataset(&entries, &source, 10, exec).unwrap())
        });
    }
    group.finish();
}

fn gradients(c: &mut Criterion) {
    let source = LabelSource::Synthetic { labeler: SyntheticLabeler::default(), seed: 0 };
    let points = build_dataset(&entries(), &source, 10, Execution::Sequential).unwrap().points;
    let scaler = Scaler::fit(points.iter().map(|p| (&p.graph, p.runtime_us))).unwrap();
    let inputs: Vec<GraphInput> = points.iter().take(32).map(|p| GraphInput::from_graph(&p.graph, &scaler)).collect();
    let batch: Vec<(&GraphInput, f64)> =
        inputs.iter().zip(&points).map(|(g, p)| (g, scaler.target.apply(p.runtime_us))).collect();
    let model = RgatModel::new(ModelConfig { hidden: 32, head1: 32, head2: 16, feat: 8, ..ModelConfig::default() }, 0);
    let mut group = c.benchmark_group("loss_and_gradients");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| loss_and_gradients(&model, &batch, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, dataset, gradients);
criterion_main!(benches);
