//! MiniRocket: a fast, almost deterministic feature transform for time series
//! classification.
//!
//! A fixed set of 84 length-9 kernels with weights `{-1, 2}` is applied at a
//! data-dependent set of dilations. Each (dilation, kernel) output is pooled
//! into several features by counting the proportion of values above biases
//! drawn from quantiles of that same output on training data. The features
//! feed a linear classifier.
//!
//! ```no_run
//! use minirocket::{fit, transform, ridge_fit, default_alphas, BiasVariant};
//! # fn main() -> minirocket::Result<()> {
//! let train = minirocket::io::load_delimited("train.tsv", '\t')?;
//! let params = fit(&train, 9996, 32, BiasVariant::Default { seed: 0 })?;
//! let features = transform(&train, &params)?;
//! let model = ridge_fit(&features, train.require_labels()?, &default_alphas())?.model;
//! # Ok(()) }
//! ```

pub mod bias;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod io;
pub mod kernels;
pub mod oracle;
pub mod timing;
pub mod transform;

pub use bias::{fit, fit_biases, fit_biases_deterministic, quantile, BiasVariant, TransformParameters};
pub use classifier::{
    accuracy, choose_classifier, default_alphas, logistic_fit, predict, ridge_fit, ClassifierKind, LinearModel,
    TrainingSchedule,
};
pub use dataset::{stratified_resample, synthesize, SyntheticKind, TimeSeriesDataset};
pub use error::{Error, Result};
pub use kernels::{
    generate_kernel_indices, kernel_weights, plan_dilations, quantile_sequence, total_num_features, DilationPlan,
    Kernel, KernelIndexSet, QuantileSequence, DEFAULT_MAX_DILATIONS_PER_KERNEL, DEFAULT_NUM_FEATURES, NUM_KERNELS,
};
pub use oracle::{convolve_naive, transform_naive};
pub use transform::{convolve_one, ppv, transform, ConvolutionScratch, FeatureMatrix};
