use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataPoint, Scaler, Split};
use crate::eval;
use crate::par::{self, Execution};
use crate::paragraph::{Mode, ParaGraph};

use super::adam::{Adam, AdamConfig};
use super::model::{loss_and_gradients, ModelConfig, RgatModel};
use super::tensor::ShapeError;
use super::{GraphInput, VOCAB_SIZE};

/// Training configuration file. Unlisted keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub hidden: usize,
    pub mode: Mode,
    pub head1: usize,
    pub head2: usize,
    pub feat: usize,
    pub leaky_slope: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            epochs: 200,
            batch: 32,
            seed: 0,
            hidden: 64,
            mode: Mode::Para,
            head1: 64,
            head2: 32,
            feat: 16,
            leaky_slope: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            vocab: VOCAB_SIZE,
            hidden: self.hidden,
            layers: 3,
            head1: self.head1,
            head2: self.head2,
            feat: self.feat,
            leaky_slope: self.leaky_slope,
        }
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("training set is empty")]
    EmptyTrain,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("gradients became non-finite in epoch {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: GraphInput,
    /// Scaled target.
    pub target: f64,
    pub runtime_us: f64,
}

/// Scaled model inputs for `points[i]`, `i` in `idx`, seen in `mode`.
pub fn prepare_samples(points: &[DataPoint], idx: &[usize], scaler: &Scaler, mode: Mode) -> Vec<Sample> {
    idx.iter()
        .map(|&i| {
            let p = &points[i];
            Sample {
                input: GraphInput::from_graph(&p.view(mode), scaler),
                target: scaler.target.apply(p.runtime_us),
                runtime_us: p.runtime_us,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_rmse_ms: f64,
    pub val_rmse_ms: f64,
    pub val_norm_rmse: Option<f64>,
}

/// A model together with what it needs to turn a graph into milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: RgatModel,
    pub scaler: Scaler,
    pub config: TrainConfig,
}

impl TrainedModel {
    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn input(&self, graph: &ParaGraph) -> GraphInput {
        GraphInput::from_graph(&graph.project(self.mode()), &self.scaler)
    }

    /// Predicted runtime in microseconds.
    pub fn predict_us(&self, graph: &ParaGraph) -> Result<f64, ShapeError> {
        self.model.forward(&self.input(graph)).map(|y| self.scaler.target.invert(y))
    }

    pub fn predict_many_us(&self, graphs: &[&ParaGraph], exec: Execution) -> Result<Vec<f64>, ShapeError> {
        par::map(exec, graphs, |g| self.predict_us(g)).into_iter().collect()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation RMSE.
    pub best: TrainedModel,
    pub best_epoch: usize,
    pub last: TrainedModel,
    pub curve: Vec<EpochStats>,
}

fn validate(model: &RgatModel, val: &[Sample], scaler: &Scaler, exec: Execution) -> Result<(f64, Option<f64>), ShapeError> {
    let preds: Result<Vec<f64>, ShapeError> =
        par::map(exec, val, |s| model.forward(&s.input).map(|y| scaler.target.invert(y))).into_iter().collect();
    let preds = preds?;
    let actual: Vec<f64> = val.iter().map(|s| s.runtime_us).collect();
    let rmse = eval::rmse(&actual, &preds).expect("validation set is non-empty");
    Ok((rmse, eval::normalized_rmse(&actual, &preds).ok()))
}

/// Mini-batch Adam on the training split; validation RMSE (ms) is recorded
/// after every epoch.
pub fn train(points: &[DataPoint], split: &Split, config: &TrainConfig, exec: Execution) -> Result<TrainOutcome, TrainError> {
    if split.train.is_empty() {
        return Err(TrainError::EmptyTrain);
    }
    if config.batch == 0 || config.hidden == 0 || config.lr.is_nan() || config.lr < 0.0 {
        return Err(TrainError::Config("batch and hidden must be positive and lr non-negative".into()));
    }
    let mode = config.mode;
    let views: Vec<ParaGraph> = split.train.iter().map(|&i| points[i].view(mode)).collect();
    let scaler = Scaler::fit(views.iter().zip(&split.train).map(|(g, &i)| (g, points[i].runtime_us)))
        .ok_or(TrainError::EmptyTrain)?;
    drop(views);
    let train_set = prepare_samples(points, &split.train, &scaler, mode);
    let val_set = prepare_samples(points, &split.val, &scaler, mode);

    let mut model = RgatModel::new(config.model_config(), config.seed);
    let mut opt = Adam::new(AdamConfig { lr: config.lr, ..AdamConfig::default() }, &model.config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let range = scaler.target.max - scaler.target.min;

    let mut curve = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, RgatModel)> = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut sq = 0.0;
        for chunk in order.chunks(config.batch) {
            let batch: Vec<(&GraphInput, f64)> = chunk.iter().map(|&i| (&train_set[i].input, train_set[i].target)).collect();
            let (loss, grads) = loss_and_gradients(&model, &batch, exec)?;
            if !grads.is_finite() || !loss.is_finite() {
                return Err(TrainError::NonFinite(epoch));
            }
            sq += loss * chunk.len() as f64;
            opt.step(&mut model.params, &grads);
        }
        let train_rmse_ms = (sq / train_set.len() as f64).sqrt() * range / 1000.0;
        let (val_rmse_ms, val_norm_rmse) = if val_set.is_empty() { (f64::NAN, None) } else { validate(&model, &val_set, &scaler, exec)? };
        log::info!("epoch {epoch}: train {train_rmse_ms:.4} ms, val {val_rmse_ms:.4} ms");
        if best.as_ref().is_none_or(|(b, _, _)| val_rmse_ms < *b) {
            best = Some((val_rmse_ms, epoch, model.clone()));
        }
        curve.push(EpochStats { epoch, train_rmse_ms, val_rmse_ms, val_norm_rmse });
    }
    let (best_model, best_epoch) = match best {
        Some((_, e, m)) => (m, e),
        None => (model.clone(), 0),
    };
    let wrap = |m: RgatModel| TrainedModel { model: m, scaler, config: config.clone() };
    Ok(TrainOutcome { best: wrap(best_model), best_epoch, last: wrap(model), curve })
}
