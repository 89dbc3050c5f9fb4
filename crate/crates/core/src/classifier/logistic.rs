//! Softmax regression trained with Adam for large training sets.
//!
//! The training set is shuffled once. A validation block is held out, the
//! rest is transformed in batches and cached, and minibatches are drawn in
//! the same order every epoch. The learning rate halves when validation loss
//! has not improved for `lr_halving_patience` updates and training stops
//! after `stopping_patience` updates without improvement.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{encode_labels, ClassifierKind, LinearModel, Standardizer};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSchedule {
    pub validation_size: usize,
    pub minibatch: usize,
    pub initial_lr: f64,
    pub lr_halving_patience: usize,
    pub stopping_patience: usize,
    pub transform_batch: usize,
    /// Updates between validation-loss evaluations.
    pub validation_interval: usize,
    /// Hard cap on passes over the training data.
    pub max_epochs: usize,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self {
            validation_size: 2048,
            minibatch: 256,
            initial_lr: 1e-4,
            lr_halving_patience: 50,
            stopping_patience: 100,
            transform_batch: 4096,
            validation_interval: 1,
            max_epochs: 200,
        }
    }
}

impl TrainingSchedule {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.validation_size,
            self.minibatch,
            self.lr_halving_patience,
            self.stopping_patience,
            self.transform_batch,
            self.validation_interval,
            self.max_epochs,
        ];
        if positive.contains(&0) || self.initial_lr.is_nan() || self.initial_lr <= 0.0 {
            return Err(Error::InvalidArgument(
                "training schedule values must be positive".into(),
            ));
        }
        if self.stopping_patience < self.lr_halving_patience {
            return Err(Error::InvalidArgument(
                "stopping patience must be at least the learning-rate halving patience".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of feeding one validation loss to a [`PlateauTracker`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlateauStep {
    pub improved: bool,
    pub lr_halved: bool,
    pub stop: bool,
}

/// Validation plateau bookkeeping. Any strictly lower loss counts as an
/// improvement.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauTracker {
    lr: f64,
    best: f64,
    halving_patience: usize,
    stopping_patience: usize,
    since_improvement: usize,
    since_halving: usize,
}

impl PlateauTracker {
    pub fn new(initial_lr: f64, halving_patience: usize, stopping_patience: usize) -> Self {
        Self {
            lr: initial_lr,
            best: f64::INFINITY,
            halving_patience,
            stopping_patience,
            since_improvement: 0,
            since_halving: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn stalled_updates(&self) -> usize {
        self.since_improvement
    }

    pub fn observe(&mut self, loss: f64) -> PlateauStep {
        if loss < self.best {
            self.best = loss;
            self.since_improvement = 0;
            self.since_halving = 0;
            return PlateauStep {
                improved: true,
                lr_halved: false,
                stop: false,
            };
        }
        self.since_improvement += 1;
        self.since_halving += 1;
        let lr_halved = self.since_halving >= self.halving_patience;
        if lr_halved {
            self.lr *= 0.5;
            self.since_halving = 0;
        }
        PlateauStep {
            improved: false,
            lr_halved,
            stop: self.since_improvement >= self.stopping_patience,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticFit {
    /// Weights from the update with the lowest validation loss.
    pub model: LinearModel,
    pub updates: usize,
    pub epochs: usize,
    pub best_validation_loss: f64,
    pub final_lr: f64,
    /// Validation loss at each evaluation.
    pub validation_losses: Vec<f64>,
    pub stopped_early: bool,
    pub validation_interval: usize,
}

/// Trains softmax regression on features produced by `transform`.
///
/// `transform` is called on batches of at most `schedule.transform_batch`
/// examples and its output is cached for all epochs.
pub fn logistic_fit<F>(
    train: &TimeSeriesDataset,
    mut transform: F,
    schedule: &TrainingSchedule,
    seed: u64,
) -> Result<LogisticFit>
where
    F: FnMut(&TimeSeriesDataset) -> Result<FeatureMatrix>,
{
    schedule.validate()?;
    if train.len() <= schedule.validation_size {
        return Err(Error::TrainingSetTooSmall {
            found: train.len(),
            validation_size: schedule.validation_size,
        });
    }
    let labels = train.require_labels()?;
    let (classes, y_all) = encode_labels(labels)?;
    let k = classes.len();

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (val_idx, train_idx) = order.split_at(schedule.validation_size);

    let mut cache = |indices: &[usize]| -> Result<FeatureMatrix> {
        let blocks = indices
            .chunks(schedule.transform_batch)
            .map(|chunk| transform(&train.subset(chunk)))
            .collect::<Result<Vec<_>>>()?;
        FeatureMatrix::vstack(&blocks)
    };
    let train_features = cache(train_idx)?;
    let val_features = cache(val_idx)?;
    let p = train_features.cols();

    let standardizer = Standardizer::fit(&train_features)?;
    let z_train = standardizer.apply(&train_features);
    let z_val = standardizer.apply(&val_features);
    let y_train: Vec<usize> = train_idx.iter().map(|&i| y_all[i]).collect();
    let y_val: Vec<usize> = val_idx.iter().map(|&i| y_all[i]).collect();

    let mut weights = vec![0.0; p * k];
    let mut bias = vec![0.0; k];
    let mut adam = Adam::new(p * k + k);
    // The tracker counts evaluations, patience is in updates.
    let interval = schedule.validation_interval;
    let mut tracker = PlateauTracker::new(
        schedule.initial_lr,
        schedule.lr_halving_patience.div_ceil(interval),
        schedule.stopping_patience.div_ceil(interval),
    );

    let mut best = (weights.clone(), bias.clone());
    let mut validation_losses = Vec::new();
    let mut grad = vec![0.0; p * k + k];
    let mut updates = 0;
    let mut epochs = 0;
    let mut stopped_early = false;
    let n_train = y_train.len();

    'epochs: while epochs < schedule.max_epochs {
        epochs += 1;
        for start in (0..n_train).step_by(schedule.minibatch) {
            let end = (start + schedule.minibatch).min(n_train);
            gradient(
                &z_train[start * p..end * p],
                &y_train[start..end],
                &weights,
                &bias,
                p,
                &mut grad,
            );
            adam.step(&mut weights, &mut bias, &grad, tracker.lr());
            updates += 1;
            if updates % interval == 0 {
                let loss = cross_entropy(&z_val, &y_val, &weights, &bias, p);
                validation_losses.push(loss);
                let step = tracker.observe(loss);
                if step.improved {
                    best = (weights.clone(), bias.clone());
                }
                if step.stop {
                    stopped_early = true;
                    break 'epochs;
                }
            }
        }
    }

    Ok(LogisticFit {
        model: LinearModel {
            kind: ClassifierKind::Logistic,
            class_labels: classes,
            feature_means: standardizer.means,
            feature_scales: standardizer.scales,
            weights: best.0,
            intercepts: best.1,
        },
        updates,
        epochs,
        best_validation_loss: tracker.best(),
        final_lr: tracker.lr(),
        validation_losses,
        stopped_early,
        validation_interval: schedule.validation_interval,
    })
}

fn logits(z: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    let k = bias.len();
    out.copy_from_slice(bias);
    for (j, &x) in z.iter().enumerate() {
        if x != 0.0 {
            for (o, &w) in out.iter_mut().zip(&weights[j * k..(j + 1) * k]) {
                *o += x * w;
            }
        }
    }
}

/// In-place softmax; returns log of the normalizer relative to the max.
fn softmax(scores: &mut [f64]) -> (f64, f64) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
    (max, sum.ln())
}

/// Mean softmax cross-entropy gradient over a minibatch, written into
/// `grad` as `[weights (p x k), bias (k)]`.
fn gradient(z: &[f64], y: &[usize], weights: &[f64], bias: &[f64], p: usize, grad: &mut [f64]) {
    let k = bias.len();
    grad.fill(0.0);
    let mut probs = vec![0.0; k];
    let scale = 1.0 / y.len() as f64;
    for (row, &label) in z.chunks_exact(p).zip(y) {
        logits(row, weights, bias, &mut probs);
        softmax(&mut probs);
        probs[label] -= 1.0;
        for (j, &x) in row.iter().enumerate() {
            if x != 0.0 {
                for (g, &d) in grad[j * k..(j + 1) * k].iter_mut().zip(&probs) {
                    *g += x * d * scale;
                }
            }
        }
        for (g, &d) in grad[p * k..].iter_mut().zip(&probs) {
            *g += d * scale;
        }
    }
}

fn cross_entropy(z: &[f64], y: &[usize], weights: &[f64], bias: &[f64], p: usize) -> f64 {
    let mut scores = vec![0.0; bias.len()];
    let mut total = 0.0;
    for (row, &label) in z.chunks_exact(p).zip(y) {
        logits(row, weights, bias, &mut scores);
        let target = scores[label];
        let (max, log_sum) = softmax(&mut scores);
        total += max + log_sum - target;
    }
    total / y.len() as f64
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, weights: &mut [f64], bias: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        let params = weights.iter_mut().chain(bias.iter_mut());
        for (((w, &g), m), v) in params.zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *w -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPSILON);
        }
    }
}
