use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::{argmax, ConfusionMatrix};
use super::HarnessError;
use crate::corpus::UniformDataset;
use crate::nn::{sgd_step, LossKind, ModelGraph, NnError, Tensor};
use crate::preprocess::FeatureTensor;
use crate::seed::{rng_for, DEFAULT_SEED};
use crate::split::SubtaskSpec;

/// How the reported epoch is chosen from a training history.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalPolicy {
    /// Highest validation F1, earliest on ties.
    #[default]
    BestValF1,
    LastEpoch,
    /// First epoch whose validation loss improved by less than `threshold`
    /// (relative) over the preceding `window` epochs.
    EarlyPlateau {
        window: usize,
        threshold: f64,
    },
}

impl EvalPolicy {
    pub fn plateau() -> Self {
        Self::EarlyPlateau { window: 10, threshold: 0.01 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::BestValF1 => "best_val_f1",
            Self::LastEpoch => "last_epoch",
            Self::EarlyPlateau { .. } => "early_plateau",
        }
    }
}

impl FromStr for EvalPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "best_val_f1" | "best" => Ok(Self::BestValF1),
            "last_epoch" | "last" => Ok(Self::LastEpoch),
            "early_plateau" | "plateau" => Ok(Self::plateau()),
            other => Err(format!("unknown policy `{other}` (best_val_f1, last_epoch, early_plateau)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// `None` uses the model family's own loss.
    pub loss: Option<LossKind>,
    pub policy: EvalPolicy,
    pub seed: u64,
    /// Z-score every feature with statistics of the training samples.
    pub normalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.05,
            weight_decay: 1e-4,
            loss: None,
            policy: EvalPolicy::BestValF1,
            seed: DEFAULT_SEED,
            normalize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) || !(self.weight_decay >= 0.0) {
            return Err(HarnessError::Config(format!(
                "need epochs >= 1, batch >= 1, lr > 0, weight decay >= 0; got {}, {}, {}, {}",
                self.epochs, self.batch_size, self.learning_rate, self.weight_decay
            )));
        }
        if let EvalPolicy::EarlyPlateau { window, threshold } = self.policy {
            if window == 0 || !(threshold > 0.0 && threshold < 1.0) {
                return Err(HarnessError::Config(format!("plateau window {window} / threshold {threshold}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub val_f1: f64,
    pub test_accuracy: f64,
    pub test_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskResult {
    pub id: String,
    pub chosen_epoch: usize,
    pub test_accuracy: f64,
    pub test_f1: f64,
    pub history: Vec<EpochRecord>,
    /// Kept out of serialized results so that reports stay reproducible.
    #[serde(skip)]
    pub wall_time: Duration,
}

/// Index of the epoch to report under `policy`. Panics on an empty history.
pub fn select_epoch(history: &[EpochRecord], policy: EvalPolicy) -> usize {
    assert!(!history.is_empty(), "select_epoch needs at least one epoch");
    match policy {
        EvalPolicy::BestValF1 => {
            let mut best = 0;
            for (i, r) in history.iter().enumerate() {
                if r.val_f1 > history[best].val_f1 {
                    best = i;
                }
            }
            best
        }
        EvalPolicy::LastEpoch => history.len() - 1,
        EvalPolicy::EarlyPlateau { window, threshold } => (window..history.len())
            .find(|&e| {
                let before = history[e - window].val_loss;
                (before - history[e].val_loss) / before.abs().max(f64::MIN_POSITIVE) < threshold
            })
            .unwrap_or(history.len() - 1),
    }
}

/// Samples of a feature dataset in global index order (trial key, then
/// segment), each a `channels × feature_dim` block.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStore {
    pub channels: usize,
    pub feature_dim: usize,
    pub classes: usize,
    data: Vec<f64>,
    labels: Vec<usize>,
}

impl SampleStore {
    pub fn new(channels: usize, feature_dim: usize, classes: usize) -> Self {
        Self { channels, feature_dim, classes, data: Vec::new(), labels: Vec::new() }
    }

    pub fn push(&mut self, sample: &[f64], label: usize) -> Result<(), HarnessError> {
        if sample.len() != self.channels * self.feature_dim || label >= self.classes {
            return Err(HarnessError::Data(format!(
                "sample of {} values / label {label} does not fit {}x{} with {} classes",
                sample.len(),
                self.channels,
                self.feature_dim,
                self.classes
            )));
        }
        self.data.extend_from_slice(sample);
        self.labels.push(label);
        Ok(())
    }

    pub fn from_dataset(dataset: &UniformDataset) -> Result<Self, HarnessError> {
        let info = dataset
            .manifest
            .features
            .as_ref()
            .ok_or_else(|| HarnessError::Data("dataset holds raw signals, not features".into()))?;
        let d = info.feature_dim;
        let mut store = Self::new(dataset.manifest.n_channels, d, dataset.manifest.num_classes());
        for (record, trial) in dataset.records() {
            let t = FeatureTensor::from_trial(trial, record.sample_count(), d);
            for k in 0..t.n_segments {
                store.push(&t.sample(k), t.label)?;
            }
        }
        Ok(store)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let w = self.channels * self.feature_dim;
        &self.data[i * w..(i + 1) * w]
    }

    /// Copy with labels permuted by `perm` (for chance-level controls).
    pub fn with_labels(&self, labels: Vec<usize>) -> Self {
        assert_eq!(labels.len(), self.len());
        Self { labels, ..self.clone() }
    }

    fn batch(&self, idx: &[usize], norm: Option<&Normalizer>) -> (Tensor, Vec<usize>) {
        let w = self.channels * self.feature_dim;
        let mut data = Vec::with_capacity(idx.len() * w);
        for &i in idx {
            match norm {
                Some(n) => data.extend(self.sample(i).iter().zip(&n.mean).zip(&n.scale).map(|((v, m), s)| (v - m) / s)),
                None => data.extend_from_slice(self.sample(i)),
            }
        }
        let x = Tensor::new(vec![idx.len(), self.channels, self.feature_dim], data).expect("batch shape");
        (x, idx.iter().map(|&i| self.labels[i]).collect())
    }
}

/// Per-coordinate z-scoring fitted on training samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Normalizer {
    pub fn fit(store: &SampleStore, idx: &[usize]) -> Self {
        let w = store.channels * store.feature_dim;
        let n = idx.len().max(1) as f64;
        let mut mean = vec![0.0; w];
        for &i in idx {
            mean.iter_mut().zip(store.sample(i)).for_each(|(m, v)| *m += v / n);
        }
        let mut var = vec![0.0; w];
        for &i in idx {
            var.iter_mut().zip(store.sample(i)).zip(&mean).for_each(|((s, v), m)| *s += (v - m).powi(2) / n);
        }
        let scale = var.iter().map(|v| v.sqrt().max(1e-8)).collect();
        Self { mean, scale }
    }
}

const EVAL_BATCH: usize = 256;

/// Confusion matrix and mean loss of `model` over `idx`.
fn evaluate_inner(
    model: &ModelGraph,
    store: &SampleStore,
    idx: &[usize],
    norm: Option<&Normalizer>,
    loss: LossKind,
) -> Result<(ConfusionMatrix, f64), HarnessError> {
    if idx.is_empty() {
        return Err(HarnessError::Data("evaluation set is empty".into()));
    }
    let mut cm = ConfusionMatrix::new(model.classes);
    let mut total_loss = 0.0;
    for chunk in idx.chunks(EVAL_BATCH) {
        let (x, y) = store.batch(chunk, norm);
        let logits = model.predict(&x)?;
        for (r, &t) in y.iter().enumerate() {
            cm.add(t, argmax(logits.row(r)))?;
        }
        let mut g = crate::nn::Graph::new();
        let lv = g.leaf(logits);
        let l = loss.apply(&mut g, lv, &y)?;
        total_loss += g.value(l).item().unwrap() * chunk.len() as f64;
    }
    Ok((cm, total_loss / idx.len() as f64))
}

/// Confusion matrix of argmax predictions (ties go to the lowest class).
pub fn evaluate(model: &ModelGraph, store: &SampleStore, idx: &[usize]) -> Result<ConfusionMatrix, HarnessError> {
    evaluate_inner(model, store, idx, None, LossKind::CrossEntropy).map(|(cm, _)| cm)
}

/// Mini-batch SGD over the training indices of `subtask`, recording
/// validation and test metrics after every epoch.
pub fn train(
    model: &mut ModelGraph,
    subtask: &SubtaskSpec,
    store: &SampleStore,
    config: &TrainConfig,
) -> Result<SubtaskResult, HarnessError> {
    config.validate()?;
    if model.channels != store.channels || model.feature_dim != store.feature_dim || model.classes != store.classes {
        return Err(HarnessError::Data(format!(
            "model expects {}x{} with {} classes, features are {}x{} with {}",
            model.channels, model.feature_dim, model.classes, store.channels, store.feature_dim, store.classes
        )));
    }
    for (name, set) in [("train", &subtask.train), ("val", &subtask.val), ("test", &subtask.test)] {
        if set.is_empty() {
            return Err(HarnessError::Data(format!("{}: {name} set is empty", subtask.id)));
        }
        if let Some(&bad) = set.iter().find(|&&i| i >= store.len()) {
            return Err(HarnessError::Data(format!("{}: sample {bad} out of range ({})", subtask.id, store.len())));
        }
    }
    let started = Instant::now();
    let loss = config.loss.unwrap_or(model.tag.default_loss());
    let norm = config.normalize.then(|| Normalizer::fit(store, &subtask.train));
    let norm = norm.as_ref();
    let mut rng = rng_for(config.seed, &format!("train/{}", subtask.id));
    let mut order = subtask.train.clone();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (x, y) = store.batch(batch, norm);
            let (value, grads) = match model.loss_and_grads(&x, &y, loss) {
                Err(NnError::NonFinite(_)) => (f64::NAN, Vec::new()),
                other => other?,
            };
            if !value.is_finite() {
                return Err(HarnessError::NonFiniteLoss { subtask: subtask.id.clone(), epoch });
            }
            epoch_loss += value * batch.len() as f64;
            sgd_step(model, &grads, config.learning_rate, config.weight_decay)?;
        }
        let (val_cm, val_loss) = evaluate_inner(model, store, &subtask.val, norm, loss)?;
        let (test_cm, _) = evaluate_inner(model, store, &subtask.test, norm, loss)?;
        history.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / order.len() as f64,
            val_loss,
            val_accuracy: val_cm.accuracy()?,
            val_f1: val_cm.f1_score()?,
            test_accuracy: test_cm.accuracy()?,
            test_f1: test_cm.f1_score()?,
        });
    }
    let chosen = select_epoch(&history, config.policy);
    Ok(SubtaskResult {
        id: subtask.id.clone(),
        chosen_epoch: chosen,
        test_accuracy: history[chosen].test_accuracy,
        test_f1: history[chosen].test_f1,
        history,
        wall_time: started.elapsed(),
    })
}
