//! End-to-end run from one config file: variants, dataset, split,
//! training, evaluation and an optional ablation. Every stage writes its
//! artifact into the output directory so stages can be rerun on their own.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::dataset::{
    build_dataset, exclude_apps, split_dataset, write_jsonl, DatasetError, ExecutorConfig, LabelSource, MeasureError,
    Split, SyntheticLabeler,
};
use crate::eval::{evaluate, run_ablation, EvalError, MetricReport};
use crate::gnn::{checkpoint_save, train, CheckpointError, TrainConfig, TrainError};
use crate::par::Execution;
use crate::variantgen::{builtin_kernels, enumerate_dataset_points, write_variants, KernelSpec, VariantError};

pub const PIPELINE_SCHEMA_VERSION: u32 = 1;

/// Source of runtime labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Labels {
    Synthetic {
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        sigma: f64,
    },
    Measured(ExecutorConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Kernel spec files; empty means the built-in corpus.
    #[serde(default)]
    pub kernels: Vec<PathBuf>,
    pub sizes: Vec<i64>,
    pub teams: Vec<u32>,
    pub threads: Vec<u32>,
    #[serde(default = "default_trip")]
    pub default_trip: u64,
    pub labels: Labels,
    #[serde(default)]
    pub exclude_apps: Vec<String>,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub ablation: bool,
}

fn default_trip() -> u64 {
    10
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Variant(#[from] VariantError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("no data point could be labelled ({0} failures)")]
    NoData(usize),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let c: PipelineConfig = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |s: &str| Err(PipelineError::Config(s.into()));
        if self.sizes.is_empty() || self.teams.is_empty() || self.threads.is_empty() {
            return bad("sizes, teams and threads must be non-empty");
        }
        if self.sizes.iter().any(|&s| s < 1) || self.teams.contains(&0) || self.threads.contains(&0) {
            return bad("grid values must be positive");
        }
        if let Some(p) = self.kernels.iter().find(|p| !p.is_file()) {
            return Err(PipelineError::Config(format!("kernel spec {} does not exist", p.display())));
        }
        Ok(())
    }

    /// Relative kernel paths are taken relative to `base`.
    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        self.kernels.iter_mut().for_each(fix);
    }

    fn specs(&self) -> Result<Vec<KernelSpec>, PipelineError> {
        if self.kernels.is_empty() {
            return Ok(builtin_kernels());
        }
        self.kernels
            .iter()
            .map(|p| {
                let text = fs::read_to_string(p).map_err(|source| PipelineError::Io { path: p.clone(), source })?;
                Ok(KernelSpec::from_json(&text)?)
            })
            .collect()
    }
}

/// Paths of everything a run writes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifacts {
    pub variants_dir: PathBuf,
    pub dataset: PathBuf,
    pub failures: PathBuf,
    pub split: PathBuf,
    pub checkpoint: PathBuf,
    pub curve: PathBuf,
    pub predictions: PathBuf,
    pub report: PathBuf,
    pub report_csv: PathBuf,
    pub ablation: Option<PathBuf>,
}

impl Artifacts {
    fn under(dir: &Path, ablation: bool) -> Artifacts {
        Artifacts {
            variants_dir: dir.join("variants"),
            dataset: dir.join("dataset.jsonl"),
            failures: dir.join("failures.json"),
            split: dir.join("split.json"),
            checkpoint: dir.join("model.ckpt"),
            curve: dir.join("curve.json"),
            predictions: dir.join("predictions.json"),
            report: dir.join("report.json"),
            report_csv: dir.join("report.csv"),
            ablation: ablation.then(|| dir.join("ablation.json")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub points: usize,
    pub failures: usize,
    pub best_epoch: usize,
    pub report: MetricReport,
    pub artifacts: Artifacts,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    write(path, serde_json::to_string_pretty(value).expect("reports serialize") + "\n")
}

fn failure_record(e: &MeasureError) -> serde_json::Value {
    json!({ "variant": e.variant, "stage": e.stage, "message": e.message })
}

pub fn run(config: &PipelineConfig, exec: Execution) -> Result<PipelineSummary, PipelineError> {
    config.validate()?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|source| PipelineError::Io { path: out.clone(), source })?;
    let art = Artifacts::under(out, config.ablation);

    let specs = config.specs()?;
    let mut kernels = Vec::with_capacity(specs.len());
    for spec in specs {
        let variants = enumerate_dataset_points(&spec, &config.sizes, &config.teams, &config.threads)?;
        kernels.push((spec, variants));
    }
    write_variants(&art.variants_dir, &kernels)?;
    log::info!("wrote {} variants", kernels.iter().map(|(_, v)| v.len()).sum::<usize>());
    let entries = crate::variantgen::read_manifest(&art.variants_dir)?;

    let source = match &config.labels {
        Labels::Synthetic { seed, sigma } => {
            LabelSource::Synthetic { labeler: SyntheticLabeler::default().with_sigma(*sigma), seed: *seed }
        }
        Labels::Measured(cfg) => LabelSource::Measured {
            config: cfg.clone(),
            variants_dir: art.variants_dir.clone(),
            work_dir: out.join("build"),
        },
    };
    let built = build_dataset(&entries, &source, config.default_trip, exec)?;
    let failures: Vec<_> = built.failures.iter().map(failure_record).collect();
    write_json(&art.failures, &failures)?;
    let points = exclude_apps(built.points, &config.exclude_apps);
    if points.is_empty() {
        return Err(PipelineError::NoData(failures.len()));
    }
    write_jsonl(&art.dataset, &points)?;

    let split = split_dataset(points.len(), config.split_seed)?;
    write_json(&art.split, &split_json(&split))?;

    let outcome = train(&points, &split, &config.train, exec)?;
    checkpoint_save(&outcome.best, &art.checkpoint)?;
    write_json(&art.curve, &outcome.curve)?;

    let val: Vec<_> = split.val.iter().map(|&i| points[i].clone()).collect();
    let (report, preds) = evaluate(&outcome.best, &val, exec)?;
    let rows: Vec<_> = split
        .val
        .iter()
        .zip(&preds)
        .map(|(&i, p)| json!({ "index": i, "app": points[i].app_name, "actual_us": points[i].runtime_us, "predicted_us": p }))
        .collect();
    write_json(&art.predictions, &rows)?;
    write_json(&art.report, &report)?;
    write(&art.report_csv, report.bins_csv())?;

    if let Some(path) = &art.ablation {
        let table = run_ablation(&points, &split, &config.train, exec)?;
        write_json(path, &table)?;
    }
    Ok(PipelineSummary { points: points.len(), failures: failures.len(), best_epoch: outcome.best_epoch, report, artifacts: art })
}

pub fn split_json(split: &Split) -> serde_json::Value {
    json!({ "schema_version": PIPELINE_SCHEMA_VERSION, "seed": split.seed, "train": split.train, "val": split.val })
}
