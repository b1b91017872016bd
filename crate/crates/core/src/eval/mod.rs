//! Error metrics, reports and the three-mode ablation.
//!
//! Errors are always range-relative: a point's relative error is its absolute
//! error divided by `max(actual) - min(actual)` over the evaluated set.
//! Sums run over (actual, predicted) pairs in sorted order so reports do not
//! depend on input order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataPoint, Split};
use crate::gnn::{train, EpochStats, TrainConfig, TrainError, TrainedModel};
use crate::par::{self, Execution};
use crate::paragraph::Mode;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const BIN_WIDTH_S: f64 = 10.0;
pub const NUM_BINS: usize = 11;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no data points")]
    Empty,
    #[error("actual runtimes have zero range")]
    ZeroRange,
}

fn sorted_pairs(actual: &[f64], predicted: &[f64]) -> Result<Vec<(f64, f64)>, MetricError> {
    if actual.len() != predicted.len() {
        return Err(MetricError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut pairs: Vec<(f64, f64)> = actual.iter().copied().zip(predicted.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(pairs)
}

fn range(actual: &[f64]) -> Result<f64, MetricError> {
    let (lo, hi) = actual.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    if actual.is_empty() {
        return Err(MetricError::Empty);
    }
    if hi > lo {
        Ok(hi - lo)
    } else {
        Err(MetricError::ZeroRange)
    }
}

/// Root mean squared error of microsecond inputs, in milliseconds.
pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    let pairs = sorted_pairs(actual, predicted)?;
    let ss: f64 = pairs.iter().map(|(a, p)| (a - p) * (a - p)).sum();
    Ok((ss / pairs.len() as f64).sqrt() / 1000.0)
}

/// RMSE divided by the range of the actual runtimes.
pub fn normalized_rmse(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    let r = rmse(actual, predicted)?;
    Ok(r * 1000.0 / range(actual)?)
}

pub fn relative_errors(actual: &[f64], predicted: &[f64]) -> Result<Vec<f64>, MetricError> {
    sorted_pairs(actual, predicted)?;
    let r = range(actual)?;
    Ok(actual.iter().zip(predicted).map(|(a, p)| (a - p).abs() / r).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo_s: f64,
    /// `None` for the open-ended last bin.
    pub hi_s: Option<f64>,
    pub mean_relative_error: Option<f64>,
    pub max_relative_error: Option<f64>,
    pub count: usize,
}

/// Index of the bin holding a runtime of `us` microseconds.
pub fn bin_index(us: f64) -> usize {
    let k = (us / 1e6 / BIN_WIDTH_S).floor();
    if k < 0.0 {
        0
    } else {
        (k as usize).min(NUM_BINS - 1)
    }
}

/// Relative error per 10 s bin of actual runtime: [0, 10), [10, 20), ...,
/// [100, inf).
pub fn binned_relative_error(actual: &[f64], predicted: &[f64]) -> Result<Vec<Bin>, MetricError> {
    let rel = relative_errors(actual, predicted)?;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); NUM_BINS];
    for (&a, &e) in actual.iter().zip(&rel) {
        members[bin_index(a)].push(e);
    }
    Ok(members
        .into_iter()
        .enumerate()
        .map(|(k, mut es)| {
            es.sort_by(f64::total_cmp);
            let count = es.len();
            let lo_s = k as f64 * BIN_WIDTH_S;
            Bin {
                lo_s,
                hi_s: (k + 1 < NUM_BINS).then_some(lo_s + BIN_WIDTH_S),
                mean_relative_error: (count > 0).then(|| es.iter().sum::<f64>() / count as f64),
                max_relative_error: es.last().copied(),
                count,
            }
        })
        .collect())
}

/// Mean relative error per application.
pub fn per_application_error(apps: &[&str], actual: &[f64], predicted: &[f64]) -> Result<BTreeMap<String, f64>, MetricError> {
    if apps.len() != actual.len() {
        return Err(MetricError::LengthMismatch(apps.len(), actual.len()));
    }
    let rel = relative_errors(actual, predicted)?;
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (app, e) in apps.iter().zip(rel) {
        groups.entry(app.to_string()).or_default().push(e);
    }
    Ok(groups
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by(f64::total_cmp);
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (k, m)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub n: usize,
    pub rmse_ms: f64,
    pub norm_rmse: Option<f64>,
    pub bins: Vec<Bin>,
    pub per_app: BTreeMap<String, f64>,
}

impl MetricReport {
    pub fn compute(apps: &[&str], actual: &[f64], predicted: &[f64]) -> Result<MetricReport, MetricError> {
        let rmse_ms = rmse(actual, predicted)?;
        let (bins, per_app, norm_rmse) = match range(actual) {
            Ok(_) => (
                binned_relative_error(actual, predicted)?,
                per_application_error(apps, actual, predicted)?,
                Some(normalized_rmse(actual, predicted)?),
            ),
            Err(MetricError::ZeroRange) => (Vec::new(), BTreeMap::new(), None),
            Err(e) => return Err(e),
        };
        Ok(MetricReport { schema_version: REPORT_SCHEMA_VERSION, n: actual.len(), rmse_ms, norm_rmse, bins, per_app })
    }

    /// `bin,lo_s,hi_s,mean_relative_error,max_relative_error,count` rows.
    pub fn bins_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        let mut s = String::from("bin,lo_s,hi_s,mean_relative_error,max_relative_error,count\n");
        for (i, b) in self.bins.iter().enumerate() {
            s.push_str(&format!(
                "{i},{},{},{},{},{}\n",
                b.lo_s,
                opt(b.hi_s),
                opt(b.mean_relative_error),
                opt(b.max_relative_error),
                b.count
            ));
        }
        s
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("prediction failed: {0}")]
    Predict(String),
}

/// Predicts every point and reports the metrics.
pub fn evaluate(model: &TrainedModel, points: &[DataPoint], exec: Execution) -> Result<(MetricReport, Vec<f64>), EvalError> {
    let graphs: Vec<_> = points.iter().map(|p| &p.graph).collect();
    let preds = model.predict_many_us(&graphs, exec).map_err(|e| EvalError::Predict(e.to_string()))?;
    let actual: Vec<f64> = points.iter().map(|p| p.runtime_us).collect();
    let apps: Vec<&str> = points.iter().map(|p| p.app_name.as_str()).collect();
    Ok((MetricReport::compute(&apps, &actual, &preds)?, preds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: Mode,
    pub final_val_rmse_ms: f64,
    pub final_val_norm_rmse: Option<f64>,
    pub best_val_rmse_ms: f64,
    pub best_epoch: usize,
    pub curve: Vec<EpochStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub schema_version: u32,
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, mode: Mode) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.mode == mode)
    }
}

/// Trains one model per mode with the same seed, split and settings.
pub fn run_ablation(points: &[DataPoint], split: &Split, config: &TrainConfig, exec: Execution) -> Result<AblationReport, EvalError> {
    let results = par::map(exec, &Mode::ALL, |&mode| {
        let cfg = TrainConfig { mode, ..config.clone() };
        train(points, split, &cfg, exec).map(|out| {
            let last = out.curve.last().cloned();
            AblationRow {
                mode,
                final_val_rmse_ms: last.as_ref().map_or(f64::NAN, |s| s.val_rmse_ms),
                final_val_norm_rmse: last.and_then(|s| s.val_norm_rmse),
                best_val_rmse_ms: out.curve.get(out.best_epoch.wrapping_sub(1)).map_or(f64::NAN, |s| s.val_rmse_ms),
                best_epoch: out.best_epoch,
                curve: out.curve,
            }
        })
    });
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(AblationReport { schema_version: REPORT_SCHEMA_VERSION, seed: config.seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_basics() {
        assert_eq!(rmse(&[5.0, 7.0], &[5.0, 7.0]), Ok(0.0));
        assert_eq!(rmse(&[0.0, 0.0], &[1000.0, 1000.0]), Ok(1.0));
        assert_eq!(rmse(&[1.0], &[]), Err(MetricError::LengthMismatch(1, 0)));
        assert_eq!(rmse(&[], &[]), Err(MetricError::Empty));
    }

    #[test]
    fn normalized_by_hand() {
        // Errors 5000 and 5000 µs -> rmse 5 ms; range 10 ms.
        assert_eq!(normalized_rmse(&[0.0, 10_000.0], &[5_000.0, 5_000.0]), Ok(0.5));
        assert_eq!(normalized_rmse(&[3.0, 3.0], &[1.0, 2.0]), Err(MetricError::ZeroRange));
        assert_eq!(normalized_rmse(&[0.0, 4.0], &[0.0, 4.0]), Ok(0.0));
    }

    #[test]
    fn bin_boundaries() {
        assert_eq!(bin_index(9.999_999e6), 0);
        assert_eq!(bin_index(10.0e6), 1);
        assert_eq!(bin_index(99.9e6), 9);
        assert_eq!(bin_index(100.0e6), 10);
        assert_eq!(bin_index(5_000.0e6), 10);
        let bins = binned_relative_error(&[1.0e6, 2.0e6], &[1.5e6, 2.0e6]).unwrap();
        assert_eq!(bins.len(), NUM_BINS);
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins[0].mean_relative_error, Some(0.25));
        assert_eq!(bins[0].max_relative_error, Some(0.5));
        assert!(bins[1..].iter().all(|b| b.count == 0 && b.mean_relative_error.is_none()));
        assert_eq!(bins[10].hi_s, None);
        assert_eq!(bins[3].lo_s, 30.0);
    }

    #[test]
    fn per_app_grouping() {
        let a = [1.0, 3.0, 1.0, 3.0];
        let p = [2.0, 3.0, 2.0, 3.0];
        let m = per_application_error(&["x", "x", "y", "y"], &a, &p).unwrap();
        assert_eq!(m["x"], m["y"]);
        let single = per_application_error(&["x"; 4], &a, &p).unwrap();
        let rel = relative_errors(&a, &p).unwrap();
        assert_eq!(single["x"], rel.iter().sum::<f64>() / 4.0);
    }

    #[test]
    fn report_is_permutation_stable() {
        let a = [0.1e6, 15.0e6, 33.0e6, 2.0e6, 120.0e6];
        let p = [0.3e6, 14.0e6, 30.0e6, 2.5e6, 100.0e6];
        let apps = ["a", "b", "a", "c", "b"];
        let r1 = MetricReport::compute(&apps, &a, &p).unwrap();
        let perm = [4, 2, 0, 3, 1];
        let a2: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
        let p2: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
        let apps2: Vec<&str> = perm.iter().map(|&i| apps[i]).collect();
        let r2 = MetricReport::compute(&apps2, &a2, &p2).unwrap();
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
        let back: MetricReport = serde_json::from_str(&serde_json::to_string(&r1).unwrap()).unwrap();
        assert_eq!(back, r1);
        assert_eq!(r1.bins.iter().map(|b| b.count).sum::<usize>(), 5);
        assert!(r1.bins_csv().lines().count() == NUM_BINS + 1);
    }
}
