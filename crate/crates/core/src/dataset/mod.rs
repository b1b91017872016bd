//! Labelled graph datasets: construction, JSON-Lines storage, scaling and
//! the train/validation split.

mod measure;
mod scaler;
mod synthetic;

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::frontend::parse_source;
use crate::par::{self, Execution};
use crate::paragraph::{build_paragraph, paragraph_from_json, paragraph_to_json, Mode, ParaGraph, ParamBindings};
use crate::variantgen::{KernelVariant, ManifestEntry, VariantKind};

pub use measure::{measure_runtime, parse_marker, ExecutorConfig, MeasureError, Stage, TIME_MARKER};
pub use scaler::{MinMax, Scaler};
pub use synthetic::{directive_factors, synthetic_label, SyntheticLabeler};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("need at least 10 points to split, got {0}")]
    TooSmall(usize),
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("non-positive runtime {runtime_us} for {app}/{variant}")]
    BadRuntime { app: String, variant: VariantKind, runtime_us: f64 },
    #[error("cannot build graph for {variant}: {message}")]
    Graph { variant: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    /// Fully weighted graph; other modes are projections of it.
    pub graph: ParaGraph,
    pub app_name: String,
    pub variant_kind: VariantKind,
    pub runtime_us: f64,
    pub platform_tag: String,
}

#[derive(Serialize, Deserialize)]
struct PointDoc {
    schema_version: u32,
    app: String,
    variant: VariantKind,
    runtime_us: f64,
    platform: String,
    graph: Value,
}

impl DataPoint {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(PointDoc {
            schema_version: DATASET_SCHEMA_VERSION,
            app: self.app_name.clone(),
            variant: self.variant_kind,
            runtime_us: self.runtime_us,
            platform: self.platform_tag.clone(),
            graph: paragraph_to_json(&self.graph),
        })
        .expect("data points always serialize")
    }

    pub fn from_json(v: &Value) -> Result<DataPoint, String> {
        let doc: PointDoc = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
        if doc.schema_version != DATASET_SCHEMA_VERSION {
            return Err(format!(
                "unsupported dataset schema version {} (expected {DATASET_SCHEMA_VERSION})",
                doc.schema_version
            ));
        }
        if !(doc.runtime_us.is_finite() && doc.runtime_us > 0.0) {
            return Err(format!("runtime_us must be positive, got {}", doc.runtime_us));
        }
        let graph = paragraph_from_json(&doc.graph).map_err(|e| e.to_string())?;
        Ok(DataPoint {
            graph,
            app_name: doc.app,
            variant_kind: doc.variant,
            runtime_us: doc.runtime_us,
            platform_tag: doc.platform,
        })
    }

    pub fn view(&self, mode: Mode) -> ParaGraph {
        self.graph.project(mode)
    }
}

pub fn write_jsonl(path: &Path, points: &[DataPoint]) -> Result<(), DatasetError> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    for p in points {
        serde_json::to_writer(&mut w, &p.to_json()).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<DataPoint>, DatasetError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fmt_err = |message: String| DatasetError::Format { path: path.display().to_string(), line: i + 1, message };
        let v: Value = serde_json::from_str(&line).map_err(|e| fmt_err(e.to_string()))?;
        out.push(DataPoint::from_json(&v).map_err(fmt_err)?);
    }
    Ok(out)
}

/// Drops every point whose application is listed.
pub fn exclude_apps(points: Vec<DataPoint>, apps: &[String]) -> Vec<DataPoint> {
    let set: BTreeSet<&str> = apps.iter().map(String::as_str).collect();
    points.into_iter().filter(|p| !set.contains(p.app_name.as_str())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub seed: u64,
}

/// Size of the validation set: `round(n / 10)`, halves rounded up.
pub fn val_size(n: usize) -> usize {
    (n + 5) / 10
}

/// Seeded shuffle of `0..n`; the last `round(n / 10)` indices validate.
pub fn split_dataset(n: usize, seed: u64) -> Result<Split, DatasetError> {
    if n < 10 {
        return Err(DatasetError::TooSmall(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let val = idx.split_off(n - val_size(n));
    Ok(Split { train: idx, val, seed })
}

/// Where labels come from.
#[derive(Debug, Clone)]
pub enum LabelSource {
    Synthetic { labeler: SyntheticLabeler, seed: u64 },
    Measured { config: ExecutorConfig, variants_dir: PathBuf, work_dir: PathBuf },
}

#[derive(Debug, Default)]
pub struct BuildReport {
    pub points: Vec<DataPoint>,
    pub failures: Vec<MeasureError>,
}

/// Graph of one variant with its problem sizes bound.
pub fn variant_graph(v: &KernelVariant, default_trip: u64) -> Result<ParaGraph, DatasetError> {
    let err = |message: String| DatasetError::Graph { variant: v.stem(), message };
    let ast = parse_source(&v.source).map_err(|e| err(e.to_string()))?;
    let bindings = ParamBindings { values: v.params.sizes.clone(), default_trip };
    build_paragraph(&ast, Mode::Para, &bindings, v.params.num_teams, v.params.num_threads).map_err(|e| err(e.to_string()))
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Builds graphs and labels for every manifest entry, in order. Failed
/// measurements are reported and skipped, never replaced by a default.
pub fn build_dataset(
    entries: &[(ManifestEntry, KernelVariant)],
    source: &LabelSource,
    default_trip: u64,
    exec: Execution,
) -> Result<BuildReport, DatasetError> {
    let indexed: Vec<(usize, &(ManifestEntry, KernelVariant))> = entries.iter().enumerate().collect();
    let results = par::map(exec, &indexed, |&(i, (entry, v))| -> Result<Result<DataPoint, MeasureError>, DatasetError> {
        let graph = variant_graph(v, default_trip)?;
        let (runtime, platform) = match source {
            LabelSource::Synthetic { labeler, seed } => {
                (Ok(synthetic_label(labeler, &graph, point_seed(*seed, i))), "synthetic".to_string())
            }
            LabelSource::Measured { config, variants_dir, work_dir } => (
                measure_runtime(v, &variants_dir.join(&entry.harness), work_dir, config),
                config.platform.clone(),
            ),
        };
        Ok(runtime.map(|runtime_us| DataPoint {
            graph,
            app_name: entry.app.clone(),
            variant_kind: entry.kind,
            runtime_us,
            platform_tag: platform,
        }))
    });
    let mut report = BuildReport::default();
    for r in results {
        match r? {
            Ok(p) if p.runtime_us > 0.0 && p.runtime_us.is_finite() => report.points.push(p),
            Ok(p) => {
                return Err(DatasetError::BadRuntime { app: p.app_name, variant: p.variant_kind, runtime_us: p.runtime_us })
            }
            Err(e) => report.failures.push(e),
        }
    }
    Ok(report)
}
