//! Bias fitting from quantiles of convolution outputs.
//!
//! In the default variant each (dilation, kernel) combination draws one
//! training example from a ChaCha stream keyed by `(seed, combination index)`,
//! so the draw does not depend on iteration order or thread count. The
//! deterministic variant pools the outputs of every training example.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::kernels::{plan_dilations, quantile_sequence, Combination, DilationPlan, QuantileSequence, KERNEL_INDICES};
use crate::transform::ConvolutionScratch;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasVariant {
    /// One randomly selected training example per combination.
    Default { seed: u64 },
    /// Every training example, no randomness.
    Deterministic,
}

impl BiasVariant {
    pub fn seed(&self) -> Option<u64> {
        match *self {
            BiasVariant::Default { seed } => Some(seed),
            BiasVariant::Deterministic => None,
        }
    }
}

/// Everything `transform` needs: the plan and one bias per feature.
///
/// Feature slots are laid out dilation-major, then kernel, then bias.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformParameters {
    pub plan: DilationPlan,
    pub biases: Vec<f64>,
    pub variant: BiasVariant,
}

impl TransformParameters {
    pub fn num_features(&self) -> usize {
        self.biases.len()
    }

    /// Quantile assigned to each feature slot.
    pub fn quantiles(&self) -> QuantileSequence {
        quantile_sequence(self.plan.total_features())
    }

    pub fn validate(&self) -> Result<()> {
        self.plan.validate()?;
        if self.biases.len() != self.plan.total_features() {
            return Err(Error::LayoutMismatch(format!(
                "{} biases for {} features",
                self.biases.len(),
                self.plan.total_features()
            )));
        }
        if self.biases.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("biases"));
        }
        Ok(())
    }
}

/// Plans dilations for `train` and fits biases in one step.
pub fn fit(
    train: &TimeSeriesDataset,
    num_features: usize,
    max_dilations_per_kernel: usize,
    variant: BiasVariant,
) -> Result<TransformParameters> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let plan = plan_dilations(train.series_length(), num_features, max_dilations_per_kernel)?;
    let quantiles = quantile_sequence(plan.total_features());
    match variant {
        BiasVariant::Default { seed } => fit_biases(train, &plan, &quantiles, seed),
        BiasVariant::Deterministic => fit_biases_deterministic(train, &plan, &quantiles),
    }
}

/// Index of the training example used by combination `combination`.
pub fn select_example(seed: u64, combination: usize, num_examples: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(combination as u64);
    rng.random_range(0..num_examples)
}

pub fn fit_biases(
    train: &TimeSeriesDataset,
    plan: &DilationPlan,
    quantiles: &QuantileSequence,
    seed: u64,
) -> Result<TransformParameters> {
    check_inputs(train, plan, quantiles)?;
    let len = plan.input_length;
    let combos: Vec<Combination> = plan.combinations().collect();
    let per_combo: Vec<Vec<f64>> = combos
        .par_iter()
        .map_init(
            || (ConvolutionScratch::new(len), vec![0.0; len]),
            |(scratch, sorted), combo| {
                let example = select_example(seed, combo.index, train.len());
                scratch.load(train.series(example));
                scratch.prepare(combo.dilation);
                sorted.copy_from_slice(scratch.kernel_output(KERNEL_INDICES[combo.kernel_index]));
                sorted.sort_unstable_by(f64::total_cmp);
                quantiles.values[combo.features.clone()]
                    .iter()
                    .map(|&q| quantile_sorted(sorted, q))
                    .collect()
            },
        )
        .collect();
    Ok(TransformParameters {
        plan: plan.clone(),
        biases: per_combo.concat(),
        variant: BiasVariant::Default { seed },
    })
}

pub fn fit_biases_deterministic(
    train: &TimeSeriesDataset,
    plan: &DilationPlan,
    quantiles: &QuantileSequence,
) -> Result<TransformParameters> {
    check_inputs(train, plan, quantiles)?;
    let len = plan.input_length;
    let combos: Vec<Combination> = plan.combinations().collect();
    // One pooled buffer (a copy of the training set's size) per worker.
    let per_combo: Vec<Vec<f64>> = combos
        .par_iter()
        .map_init(
            || (ConvolutionScratch::new(len), Vec::with_capacity(train.len() * len)),
            |(scratch, pooled), combo| {
                pooled.clear();
                let triple = KERNEL_INDICES[combo.kernel_index];
                for x in train.iter() {
                    scratch.load(x);
                    scratch.prepare(combo.dilation);
                    pooled.extend_from_slice(scratch.kernel_output(triple));
                }
                pooled.sort_unstable_by(f64::total_cmp);
                quantiles.values[combo.features.clone()]
                    .iter()
                    .map(|&q| quantile_sorted(pooled, q))
                    .collect()
            },
        )
        .collect();
    Ok(TransformParameters {
        plan: plan.clone(),
        biases: per_combo.concat(),
        variant: BiasVariant::Deterministic,
    })
}

fn check_inputs(train: &TimeSeriesDataset, plan: &DilationPlan, quantiles: &QuantileSequence) -> Result<()> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    plan.validate()?;
    if train.series_length() != plan.input_length {
        return Err(Error::LengthMismatch {
            expected: plan.input_length,
            found: train.series_length(),
        });
    }
    if quantiles.values.len() != plan.total_features() {
        return Err(Error::LayoutMismatch(format!(
            "{} quantiles for {} features",
            quantiles.values.len(),
            plan.total_features()
        )));
    }
    Ok(())
}

/// Linear-interpolation quantile of unsorted `values`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("quantile input"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("quantile {q} outside [0, 1]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
