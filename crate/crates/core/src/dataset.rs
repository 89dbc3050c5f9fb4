//! Equal-length univariate datasets, synthetic generators and stratified
//! train/test splitting.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kernels::KERNEL_LENGTH;

/// Equal-length series stored row-major, with optional string labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    name: String,
    length: usize,
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl TimeSeriesDataset {
    /// Builds a labelled dataset from individual series.
    pub fn new(name: impl Into<String>, series: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if series.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} series but {} labels",
                series.len(),
                labels.len()
            )));
        }
        Self::build(name.into(), series, Some(labels))
    }

    pub fn unlabelled(name: impl Into<String>, series: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(name.into(), series, None)
    }

    fn build(name: String, series: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self> {
        let length = series.first().ok_or(Error::Empty("dataset"))?.len();
        if length < KERNEL_LENGTH {
            return Err(Error::UnsupportedLength(length));
        }
        let mut values = Vec::with_capacity(series.len() * length);
        for s in &series {
            if s.len() != length {
                return Err(Error::LengthMismatch {
                    expected: length,
                    found: s.len(),
                });
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("series"));
            }
            values.extend_from_slice(s);
        }
        Ok(Self {
            name,
            length,
            values,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.length
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn series_length(&self) -> usize {
        self.length
    }

    pub fn series(&self, i: usize) -> &[f64] {
        &self.values[i * self.length..(i + 1) * self.length]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.length)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[String]> {
        self.labels()
            .ok_or_else(|| Error::InvalidArgument(format!("dataset '{}' has no labels", self.name)))
    }

    /// Examples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.length);
        for &i in indices {
            values.extend_from_slice(self.series(i));
        }
        Self {
            name: self.name.clone(),
            length: self.length,
            values,
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
        }
    }

    /// Applies `f` to every value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Class 0 is one sine period over the series, class 1 is two.
    SineFrequency,
    /// Class 0 is zero-mean noise, class 1 a linear ramp from -1 to 1.
    NoiseVsTrend,
}

/// Two-class synthetic dataset with additive Gaussian noise. Labels are
/// `"0"` and `"1"`, class 0 first.
pub fn synthesize(
    kind: SyntheticKind,
    n_per_class: usize,
    length: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<TimeSeriesDataset> {
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be at least 1".into()));
    }
    if length < KERNEL_LENGTH {
        return Err(Error::UnsupportedLength(length));
    }
    let noise =
        Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidArgument(format!("noise sigma {noise_sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut series = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for class in 0..2usize {
        for _ in 0..n_per_class {
            let s = (0..length)
                .map(|t| {
                    let clean = match kind {
                        SyntheticKind::SineFrequency => {
                            let freq = (class + 1) as f64;
                            (2.0 * std::f64::consts::PI * freq * t as f64 / length as f64).sin()
                        }
                        SyntheticKind::NoiseVsTrend if class == 0 => 0.0,
                        SyntheticKind::NoiseVsTrend => -1.0 + 2.0 * t as f64 / (length - 1) as f64,
                    };
                    clean + noise.sample(&mut rng)
                })
                .collect();
            series.push(s);
            labels.push(class.to_string());
        }
    }
    let name = match kind {
        SyntheticKind::SineFrequency => "sine_freq",
        SyntheticKind::NoiseVsTrend => "noise_vs_trend",
    };
    TimeSeriesDataset::new(name, series, labels)
}

/// Per-class proportional split into disjoint train and test sets that
/// together cover the input. Each class keeps at least one example on
/// each side.
pub fn stratified_resample(
    dataset: &TimeSeriesDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(TimeSeriesDataset, TimeSeriesDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction must lie strictly between 0 and 1, got {train_fraction}"
        )));
    }
    let labels = dataset.require_labels()?;
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l.as_str()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (label, mut members) in by_class {
        if members.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "class '{label}' has a single example and cannot be split"
            )));
        }
        members.shuffle(&mut rng);
        let n_train = ((members.len() as f64 * train_fraction).round() as usize).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((dataset.subset(&train), dataset.subset(&test)))
}
