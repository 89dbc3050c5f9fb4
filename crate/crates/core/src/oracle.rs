//! Brute-force reference implementation.
//!
//! Every output value here is an explicit nine-term multiply-add over the
//! kernel weights. No shared accumulators, no precomputed multiples. It is
//! the ground truth for the optimized transform and the baseline for the
//! speed comparison.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bias::{fit, select_example, BiasVariant, TransformParameters};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::kernels::{
    kernel_weights, DEFAULT_MAX_DILATIONS_PER_KERNEL, DEFAULT_NUM_FEATURES, KERNEL_INDICES, KERNEL_LENGTH,
};
use crate::transform::{transform, transform_with_parity_fault, FeatureMatrix};

/// `output[i] = sum_j weights[j] * x[i + (j - 4) * dilation]`, reading zero
/// outside the series.
pub fn convolve_naive(x: &[f64], weights: &[f64; KERNEL_LENGTH], dilation: usize) -> Result<Vec<f64>> {
    crate::transform::check_dilation(x.len(), dilation)?;
    let n = x.len() as isize;
    let d = dilation as isize;
    let mut out = vec![0.0; x.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let mut sum = 0.0;
        for (j, &w) in weights.iter().enumerate() {
            let idx = i as isize + (j as isize - 4) * d;
            if idx >= 0 && idx < n {
                sum += w * x[idx as usize];
            }
        }
        *o = sum;
    }
    Ok(out)
}

fn ppv_naive(c: &[f64], bias: f64) -> f64 {
    let mut positive = 0;
    for &v in c {
        if v > bias {
            positive += 1;
        }
    }
    positive as f64 / c.len() as f64
}

/// Kernel-by-kernel transform with the same layout and padding rule as
/// [`crate::transform::transform`].
pub fn transform_naive(dataset: &TimeSeriesDataset, params: &TransformParameters) -> Result<FeatureMatrix> {
    params.validate()?;
    let plan = &params.plan;
    if dataset.series_length() != plan.input_length {
        return Err(Error::LengthMismatch {
            expected: plan.input_length,
            found: dataset.series_length(),
        });
    }
    let len = plan.input_length;
    let cols = plan.total_features();
    let mut values = Vec::with_capacity(dataset.len() * cols);
    for x in dataset.iter() {
        for combo in plan.combinations() {
            let weights = kernel_weights(KERNEL_INDICES[combo.kernel_index])?.weights;
            let c = convolve_naive(x, &weights, combo.dilation)?;
            let trim = 4 * combo.dilation;
            let pooled = if combo.padded() { &c[..] } else { &c[trim..len - trim] };
            for slot in combo.features.clone() {
                values.push(ppv_naive(pooled, params.biases[slot]));
            }
        }
    }
    FeatureMatrix::new(dataset.len(), cols, values)
}

/// Bias fitting through the naive convolution, same example selection and
/// quantile estimator as [`crate::bias`].
pub fn fit_biases_naive(train: &TimeSeriesDataset, params_like: &TransformParameters) -> Result<Vec<f64>> {
    let plan = &params_like.plan;
    let quantiles = params_like.quantiles();
    let mut biases = Vec::with_capacity(plan.total_features());
    for combo in plan.combinations() {
        let weights = kernel_weights(KERNEL_INDICES[combo.kernel_index])?.weights;
        let pooled: Vec<f64> = match params_like.variant {
            BiasVariant::Default { seed } => {
                let e = select_example(seed, combo.index, train.len());
                convolve_naive(train.series(e), &weights, combo.dilation)?
            }
            BiasVariant::Deterministic => {
                let mut all = Vec::new();
                for x in train.iter() {
                    all.extend(convolve_naive(x, &weights, combo.dilation)?);
                }
                all
            }
        };
        for slot in combo.features.clone() {
            biases.push(crate::bias::quantile(&pooled, quantiles.values[slot])?);
        }
    }
    Ok(biases)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestConfig {
    pub cases: usize,
    pub seed: u64,
    pub min_length: usize,
    pub max_length: usize,
    pub max_examples: usize,
    pub num_features: usize,
    pub tolerance: f64,
    /// Run the optimized side with its padding parity flipped.
    pub inject_parity_fault: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            cases: 200,
            seed: 0,
            min_length: 16,
            max_length: 512,
            max_examples: 20,
            num_features: DEFAULT_NUM_FEATURES,
            tolerance: 1e-6,
            inject_parity_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestCase {
    pub length: usize,
    pub examples: usize,
    pub variant: BiasVariant,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub cases: Vec<SelftestCase>,
    pub max_abs_diff: f64,
    pub tolerance: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.max_abs_diff <= self.tolerance
    }
}

/// Random oracle-equivalence cases: fit on random data, then compare the
/// optimized and naive transforms feature by feature. Alternates the two
/// bias variants. Cases run in parallel on the current rayon pool.
pub fn selftest(config: &SelftestConfig) -> Result<SelftestReport> {
    use rayon::prelude::*;

    if config.cases == 0 {
        return Err(Error::InvalidArgument("self-test needs at least one case".into()));
    }
    if config.min_length < KERNEL_LENGTH || config.max_length < config.min_length || config.max_examples == 0 {
        return Err(Error::InvalidArgument("invalid self-test ranges".into()));
    }
    let cases: Vec<SelftestCase> = (0..config.cases)
        .into_par_iter()
        .map(|case| run_case(config, case))
        .collect::<Result<_>>()?;
    let max_abs_diff = cases.iter().map(|c| c.max_abs_diff).fold(0.0, f64::max);
    Ok(SelftestReport {
        cases,
        max_abs_diff,
        tolerance: config.tolerance,
    })
}

fn run_case(config: &SelftestConfig, case: usize) -> Result<SelftestCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(case as u64);
    let length = rng.random_range(config.min_length..=config.max_length);
    let examples = rng.random_range(1..=config.max_examples);
    let scale = rng.random_range(0.1..10.0);
    let offset = rng.random_range(-5.0..5.0);
    let series: Vec<Vec<f64>> = (0..examples)
        .map(|_| {
            (0..length)
                .map(|_| offset + scale * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let labels = (0..examples).map(|i| (i % 2).to_string()).collect();
    let data = TimeSeriesDataset::new(format!("selftest-{case}"), series, labels)?;
    let variant = if case.is_multiple_of(2) {
        BiasVariant::Default { seed: rng.random() }
    } else {
        BiasVariant::Deterministic
    };
    let params = fit(&data, config.num_features, DEFAULT_MAX_DILATIONS_PER_KERNEL, variant)?;
    let fast = if config.inject_parity_fault {
        transform_with_parity_fault(&data, &params)?
    } else {
        transform(&data, &params)?
    };
    let naive = transform_naive(&data, &params)?;
    let max_abs_diff = fast
        .as_slice()
        .iter()
        .zip(naive.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SelftestCase {
        length,
        examples,
        variant,
        max_abs_diff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_interior_is_zero() {
        let w = kernel_weights([0, 2, 5]).unwrap().weights;
        let out = convolve_naive(&[1.5; 30], &w, 2).unwrap();
        assert!(out[8..22].iter().all(|&v| v == 0.0));
        assert!(convolve_naive(&[0.0; 30], &w, 3).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn impulse_imprint() {
        let w = kernel_weights([1, 2, 7]).unwrap().weights;
        let mut x = vec![0.0; 15];
        x[7] = 1.0;
        let out = convolve_naive(&x, &w, 1).unwrap();
        let mut reversed = w;
        reversed.reverse();
        assert_eq!(&out[3..12], &reversed);
        assert!(out[..3].iter().chain(&out[12..]).all(|&v| v == 0.0));
    }

    #[test]
    fn shared_layout() {
        let data = crate::dataset::synthesize(crate::dataset::SyntheticKind::SineFrequency, 2, 40, 0.1, 0).unwrap();
        let params = fit(&data, 840, 32, BiasVariant::Default { seed: 1 }).unwrap();
        let naive = transform_naive(&data, &params).unwrap();
        assert_eq!(naive.cols(), 84 * params.plan.features_per_kernel());
        assert_eq!(naive.rows(), 4);
        let fast = transform(&data, &params).unwrap();
        for (i, (a, b)) in naive.as_slice().iter().zip(fast.as_slice()).enumerate() {
            assert!((a - b).abs() <= 1e-6, "slot {i}: naive {a} fast {b}");
        }
    }

    #[test]
    fn zero_dataset_has_zero_features() {
        let data = TimeSeriesDataset::new("z", vec![vec![0.0; 20]; 3], vec!["a".into(); 3]).unwrap();
        let params = fit(&data, 9996, 32, BiasVariant::Deterministic).unwrap();
        assert!(transform_naive(&data, &params)
            .unwrap()
            .as_slice()
            .iter()
            .all(|&f| f == 0.0));
        assert!(transform(&data, &params).unwrap().as_slice().iter().all(|&f| f == 0.0));
    }

    #[test]
    fn naive_biases_match_fast_fit() {
        let data = crate::dataset::synthesize(crate::dataset::SyntheticKind::NoiseVsTrend, 3, 57, 0.5, 2).unwrap();
        for variant in [BiasVariant::Default { seed: 4 }, BiasVariant::Deterministic] {
            let params = fit(&data, 1680, 32, variant).unwrap();
            let naive = fit_biases_naive(&data, &params).unwrap();
            for (a, b) in naive.iter().zip(&params.biases) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn selftest_detects_parity_fault() {
        let config = SelftestConfig {
            cases: 4,
            max_length: 64,
            max_examples: 3,
            num_features: 840,
            ..SelftestConfig::default()
        };
        assert!(selftest(&config).unwrap().passed());
        let faulty = SelftestConfig {
            inject_parity_fault: true,
            ..config
        };
        assert!(!selftest(&faulty).unwrap().passed());
        assert!(selftest(&SelftestConfig { cases: 0, ..config }).is_err());
    }
}
