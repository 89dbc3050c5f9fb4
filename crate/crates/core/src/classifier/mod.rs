//! Linear classifiers over PPV features.

mod logistic;
mod ridge;

pub use logistic::{logistic_fit, LogisticFit, PlateauStep, PlateauTracker, TrainingSchedule};
pub use ridge::{default_alphas, ridge_fit, RidgeFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::FeatureMatrix;

/// Training-set size above which logistic regression is preferred.
pub const RIDGE_MAX_TRAIN: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Ridge,
    Logistic,
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClassifierKind::Ridge => "ridge",
            ClassifierKind::Logistic => "logistic",
        })
    }
}

pub fn choose_classifier(num_train: usize) -> ClassifierKind {
    if num_train <= RIDGE_MAX_TRAIN {
        ClassifierKind::Ridge
    } else {
        ClassifierKind::Logistic
    }
}

/// A fitted linear classifier. Scores are computed on standardized
/// features: `((x - mean) / scale) . W[:, k] + intercept[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: ClassifierKind,
    pub class_labels: Vec<String>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    /// features x classes, row-major.
    pub weights: Vec<f64>,
    pub intercepts: Vec<f64>,
}

impl LinearModel {
    pub fn num_features(&self) -> usize {
        self.feature_means.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (p, k) = (self.num_features(), self.num_classes());
        if k < 2 {
            return Err(Error::TooFewClasses(k));
        }
        if self.feature_scales.len() != p || self.weights.len() != p * k || self.intercepts.len() != k {
            return Err(Error::Format("model arrays have inconsistent sizes".into()));
        }
        if self.feature_scales.iter().any(|&s| s.is_nan() || s <= 0.0) {
            return Err(Error::Format("feature scales must be positive".into()));
        }
        Ok(())
    }

    /// Class scores for one feature row.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let k = self.num_classes();
        let mut out = self.intercepts.clone();
        for (j, &x) in row.iter().enumerate() {
            let z = (x - self.feature_means[j]) / self.feature_scales[j];
            if z != 0.0 {
                for (o, &w) in out.iter_mut().zip(&self.weights[j * k..(j + 1) * k]) {
                    *o += z * w;
                }
            }
        }
        out
    }

    /// Predicted class index per row; ties go to the lower index.
    pub fn predict_indices(&self, features: &FeatureMatrix) -> Result<Vec<usize>> {
        if features.cols() != self.num_features() {
            return Err(Error::LayoutMismatch(format!(
                "model expects {} features, got {}",
                self.num_features(),
                features.cols()
            )));
        }
        Ok(features
            .iter_rows()
            .take(features.rows())
            .map(|r| argmax(&self.scores(r)))
            .collect())
    }

    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<String>> {
        Ok(self
            .predict_indices(features)?
            .into_iter()
            .map(|i| self.class_labels[i].clone())
            .collect())
    }
}

pub fn predict(model: &LinearModel, features: &FeatureMatrix) -> Result<Vec<String>> {
    model.predict(features)
}

/// Fraction of predictions equal to the truth.
pub fn accuracy(predicted: &[String], truth: &[String]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Sorted distinct labels and the class index of every example.
pub(crate) fn encode_labels(labels: &[String]) -> Result<(Vec<String>, Vec<usize>)> {
    let classes: Vec<String> = labels
        .iter()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(Error::TooFewClasses(classes.len()));
    }
    let index = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label present"))
        .collect();
    Ok((classes, index))
}

/// Per-column mean and population standard deviation. Columns with zero
/// variance get scale 1.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &FeatureMatrix) -> Result<Self> {
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        let (n, p) = (features.rows(), features.cols());
        let mut means = vec![0.0; p];
        for row in features.iter_rows().take(n) {
            for (m, &x) in means.iter_mut().zip(row) {
                *m += x;
            }
        }
        means.iter_mut().for_each(|m| *m /= n as f64);
        let mut vars = vec![0.0; p];
        for row in features.iter_rows().take(n) {
            for ((v, &m), &x) in vars.iter_mut().zip(&means).zip(row) {
                *v += (x - m) * (x - m);
            }
        }
        let scales = vars
            .into_iter()
            .map(|v| {
                let s = (v / n as f64).sqrt();
                // PPV columns are multiples of 1/len; anything this small is rounding.
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { means, scales })
    }

    pub fn apply(&self, features: &FeatureMatrix) -> Vec<f64> {
        let mut out = Vec::with_capacity(features.rows() * features.cols());
        for row in features.iter_rows().take(features.rows()) {
            out.extend(
                row.iter()
                    .zip(&self.means)
                    .zip(&self.scales)
                    .map(|((&x, &m), &s)| (x - m) / s),
            );
        }
        out
    }
}
