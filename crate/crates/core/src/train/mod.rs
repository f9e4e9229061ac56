//! Training: minibatch Adam on softmax cross-entropy with early stopping and
//! k-fold cross validation.

mod adam;
mod checkpoint;
mod network;

pub use adam::Adam;
pub use checkpoint::{ModelCheckpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use network::{default_tau, SoftLayer, SoftLgn};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::ArchitectureSpec;
use crate::compile::discretize;
use crate::data::{make_splits, EncodedDataset, SplitPlan};
use crate::error::{Error, Result};
use crate::Scalar;
use network::Workspace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    /// Groupsum temperature; `None` means `group_size / 16`.
    pub tau: Option<f64>,
    pub seed: u64,
    pub folds: usize,
    /// Train only the first `n` folds (all when `None`).
    pub max_fold_runs: Option<usize>,
    pub test_fraction: f64,
    /// Samples per gradient-reduction chunk. Chunk sums are added in chunk
    /// order, so results do not depend on the thread count.
    pub chunk_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 64,
            patience: 10,
            max_epochs: 200,
            tau: None,
            seed: 0,
            folds: 5,
            max_fold_runs: None,
            test_fraction: 0.2,
            chunk_size: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::validation("learning rate must be positive"));
        }
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 || self.folds == 0 || self.chunk_size == 0 {
            return Err(Error::validation("batch size, patience, epochs, folds and chunk size must be positive"));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::validation("tau must be positive"));
            }
        }
        if self.max_fold_runs == Some(0) {
            return Err(Error::validation("max_fold_runs must be positive"));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::validation("test fraction must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Soft,
    Hard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub history: Vec<EpochRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub val_soft_accuracy: f64,
    pub val_hard_accuracy: f64,
    pub fit: FitReport,
}

#[derive(Clone, Debug)]
pub struct TrainedResult<T> {
    /// Network of the fold with the best validation hard accuracy.
    pub network: SoftLgn<T>,
    pub best_fold: usize,
    pub folds: Vec<FoldMetrics>,
    pub mean_val_accuracy: f64,
    pub std_val_accuracy: f64,
    pub test_soft_accuracy: Option<f64>,
    pub test_hard_accuracy: Option<f64>,
    pub splits: SplitPlan,
}

/// Serializable summary of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub best_fold: usize,
    pub folds: Vec<FoldMetrics>,
    pub mean_val_accuracy: f64,
    pub std_val_accuracy: f64,
    pub test_soft_accuracy: Option<f64>,
    pub test_hard_accuracy: Option<f64>,
}

impl<T> TrainedResult<T> {
    pub fn summary(&self) -> TrainSummary {
        TrainSummary {
            best_fold: self.best_fold,
            folds: self.folds.clone(),
            mean_val_accuracy: self.mean_val_accuracy,
            std_val_accuracy: self.std_val_accuracy,
            test_soft_accuracy: self.test_soft_accuracy,
            test_hard_accuracy: self.test_hard_accuracy,
        }
    }
}

fn check_dataset(spec: &ArchitectureSpec, data: &EncodedDataset) -> Result<()> {
    if data.bit_count() != spec.input_bits {
        return Err(Error::domain(format!(
            "dataset has {} bits per sample, architecture expects {}",
            data.bit_count(),
            spec.input_bits
        )));
    }
    if data.class_count() != spec.class_count {
        return Err(Error::domain(format!(
            "dataset has {} classes, architecture expects {}",
            data.class_count(),
            spec.class_count
        )));
    }
    Ok(())
}

/// Trains one model per fold and keeps the best.
pub fn train<T: Scalar>(spec: &ArchitectureSpec, data: &EncodedDataset, cfg: &TrainConfig) -> Result<TrainedResult<T>> {
    cfg.validate()?;
    spec.validate()?;
    check_dataset(spec, data)?;
    let splits = make_splits(data.labels(), spec.class_count, cfg.seed, cfg.folds, cfg.test_fraction)?;
    let runs = cfg.max_fold_runs.unwrap_or(cfg.folds).min(cfg.folds);
    let mut folds = Vec::with_capacity(runs);
    let mut best: Option<(usize, f64, SoftLgn<T>)> = None;
    for k in 0..runs {
        let mut net = SoftLgn::<T>::init(spec)?;
        if let Some(t) = cfg.tau {
            net.tau = T::of(t);
        }
        let train_idx = splits.train_for(k);
        let val_idx = splits.validation_for(k).to_vec();
        let fit_report = fit(&mut net, data, &train_idx, &val_idx, cfg, cfg.seed.wrapping_add(k as u64))?;
        let soft = evaluate_subset(&net, data, &val_idx, EvalMode::Soft)?;
        let hard = evaluate_subset(&net, data, &val_idx, EvalMode::Hard)?;
        folds.push(FoldMetrics {
            fold: k,
            val_soft_accuracy: soft,
            val_hard_accuracy: hard,
            fit: fit_report,
        });
        if best.as_ref().is_none_or(|(_, acc, _)| hard > *acc) {
            best = Some((k, hard, net));
        }
    }
    let (best_fold, _, network) = best.expect("at least one fold");
    let accs: Vec<f64> = folds.iter().map(|f| f.val_hard_accuracy).collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let std = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / accs.len() as f64).sqrt();
    let (test_soft, test_hard) = if splits.test.is_empty() {
        (None, None)
    } else {
        (
            Some(evaluate_subset(&network, data, &splits.test, EvalMode::Soft)?),
            Some(evaluate_subset(&network, data, &splits.test, EvalMode::Hard)?),
        )
    };
    Ok(TrainedResult {
        network,
        best_fold,
        folds,
        mean_val_accuracy: mean,
        std_val_accuracy: std,
        test_soft_accuracy: test_soft,
        test_hard_accuracy: test_hard,
        splits,
    })
}

/// Trains `net` in place on `train_idx`, early-stopping on the loss over
/// `val_idx`. The weights of the best epoch are restored on return.
pub fn fit<T: Scalar>(
    net: &mut SoftLgn<T>,
    data: &EncodedDataset,
    train_idx: &[usize],
    val_idx: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<FitReport> {
    cfg.validate()?;
    check_dataset(&net.spec, data)?;
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::domain("training and validation sets must be non-empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adam = Adam::<T>::new(net.neuron_count(), cfg.learning_rate);
    let mut order = train_idx.to_vec();
    let mut best_loss = mean_loss(net, data, val_idx)?;
    let mut best_weights = snapshot(net);
    let mut best_epoch = 0;
    let mut wait = 0;
    let mut history = Vec::new();
    let mut stopped_early = false;
    let mut epochs_run = 0;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            let loss = batch_step(net, data, batch, cfg.chunk_size, &mut adam);
            if !loss.is_finite() || !net.weights_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    step,
                    learning_rate: cfg.learning_rate,
                });
            }
            train_loss += loss * batch.len() as f64;
        }
        train_loss /= order.len() as f64;
        let val_loss = mean_loss(net, data, val_idx)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                step: order.len().div_ceil(cfg.batch_size),
                learning_rate: cfg.learning_rate,
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        epochs_run = epoch;
        if val_loss < best_loss {
            best_loss = val_loss;
            best_weights = snapshot(net);
            best_epoch = epoch;
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }
    restore(net, best_weights);
    Ok(FitReport {
        epochs_run,
        best_epoch,
        best_val_loss: best_loss,
        stopped_early,
        history,
    })
}

fn snapshot<T: Scalar>(net: &SoftLgn<T>) -> Vec<Vec<crate::GateWeights<T>>> {
    net.layers.iter().map(|l| l.weights.clone()).collect()
}

fn restore<T: Scalar>(net: &mut SoftLgn<T>, weights: Vec<Vec<crate::GateWeights<T>>>) {
    for (l, w) in net.layers.iter_mut().zip(weights) {
        l.weights = w;
    }
}

/// One Adam step on the mean loss of `batch`; returns that loss.
fn batch_step<T: Scalar>(net: &mut SoftLgn<T>, data: &EncodedDataset, batch: &[usize], chunk: usize, adam: &mut Adam<T>) -> f64 {
    let coef = net.coefficients();
    let shared: &SoftLgn<T> = net;
    let parts: Vec<(T, Vec<[T; 4]>)> = batch
        .par_chunks(chunk)
        .map(|idx| {
            let mut ws = Workspace::new(shared);
            let mut acc = vec![[T::zero(); 4]; shared.neuron_count()];
            let mut x = vec![T::zero(); shared.input_bits()];
            let mut loss = T::zero();
            for &i in idx {
                data.fill_reals(i, &mut x);
                loss += ws.forward_backward(shared, &coef, &x, data.label(i), &mut acc);
            }
            (loss, acc)
        })
        .collect();
    let mut parts = parts.into_iter();
    let (mut loss, mut acc) = parts.next().expect("non-empty batch");
    for (l, a) in parts {
        loss += l;
        for (dst, src) in acc.iter_mut().zip(&a) {
            for m in 0..4 {
                dst[m] += src[m];
            }
        }
    }
    let n = T::of(batch.len() as f64);
    let grads = shared.logit_gradients(&acc, n);
    adam.update(net.layers.iter_mut().flat_map(|l| l.weights.iter_mut().map(|w| &mut w.0)), &grads);
    (loss / n).as_f64()
}

/// Mean cross-entropy over `indices`.
pub fn mean_loss<T: Scalar>(net: &SoftLgn<T>, data: &EncodedDataset, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::domain("empty dataset"));
    }
    let coef = net.coefficients();
    let parts: Vec<f64> = indices
        .par_chunks(64)
        .map(|idx| {
            let mut ws = Workspace::new(net);
            let mut x = vec![T::zero(); net.input_bits()];
            idx.iter()
                .map(|&i| {
                    data.fill_reals(i, &mut x);
                    ws.loss(net, &coef, &x, data.label(i)).0.as_f64()
                })
                .sum()
        })
        .collect();
    Ok(parts.iter().sum::<f64>() / indices.len() as f64)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_first<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Accuracy over the whole dataset.
pub fn evaluate<T: Scalar>(net: &SoftLgn<T>, data: &EncodedDataset, mode: EvalMode) -> Result<f64> {
    let all: Vec<usize> = (0..data.len()).collect();
    evaluate_subset(net, data, &all, mode)
}

/// Accuracy over the samples in `indices`.
pub fn evaluate_subset<T: Scalar>(net: &SoftLgn<T>, data: &EncodedDataset, indices: &[usize], mode: EvalMode) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::domain("cannot evaluate on an empty dataset"));
    }
    check_dataset(&net.spec, data)?;
    let correct = match mode {
        EvalMode::Hard => {
            let hard = discretize(net);
            hard.predict_indices(data, indices)
                .iter()
                .zip(indices)
                .filter(|(p, &i)| **p == data.label(i))
                .count()
        }
        EvalMode::Soft => {
            let coef = net.coefficients();
            let counts: Vec<usize> = indices
                .par_chunks(64)
                .map(|idx| {
                    let mut ws = Workspace::new(net);
                    let mut x = vec![T::zero(); net.input_bits()];
                    idx.iter()
                        .filter(|&&i| {
                            data.fill_reals(i, &mut x);
                            let (_, logits) = ws.loss(net, &coef, &x, 0);
                            argmax_first(&logits) == data.label(i)
                        })
                        .count()
                })
                .collect();
            counts.iter().sum()
        }
    };
    Ok(correct as f64 / indices.len() as f64)
}
