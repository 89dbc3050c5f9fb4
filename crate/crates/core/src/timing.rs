//! Wall-clock comparison of the optimized and naive transforms.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bias::{fit, BiasVariant, TransformParameters};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::kernels::{DEFAULT_MAX_DILATIONS_PER_KERNEL, DEFAULT_NUM_FEATURES};
use crate::oracle::transform_naive;
use crate::transform::transform;

/// Ratio bounds for linear scaling when the input size doubles.
pub const LINEAR_RATIO_RANGE: (f64, f64) = (1.4, 2.6);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub length: usize,
    pub examples: usize,
    pub fast_ms: f64,
    pub naive_ms: Option<f64>,
}

impl BenchRow {
    pub fn speedup(&self) -> Option<f64> {
        self.naive_ms.map(|n| n / self.fast_ms)
    }
}

/// Uniform noise series and default-variant parameters fitted on them.
pub fn workload(length: usize, examples: usize, seed: u64) -> Result<(TimeSeriesDataset, TransformParameters)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let series: Vec<Vec<f64>> = (0..examples)
        .map(|_| (0..length).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let labels = (0..examples).map(|i| (i % 2).to_string()).collect();
    let data = TimeSeriesDataset::new(format!("bench-{length}x{examples}"), series, labels)?;
    let params = fit(
        &data,
        DEFAULT_NUM_FEATURES,
        DEFAULT_MAX_DILATIONS_PER_KERNEL,
        BiasVariant::Default { seed },
    )?;
    Ok((data, params))
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn time_ms(mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    let start = Instant::now();
    f()?;
    Ok(start.elapsed().as_secs_f64() * 1e3)
}

/// Median time of `repeats` runs of each transform on the same workload.
/// Runs on the current rayon pool.
pub fn bench_point(length: usize, examples: usize, repeats: usize, with_naive: bool, seed: u64) -> Result<BenchRow> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let (data, params) = workload(length, examples, seed)?;
    let mut fast = (0..repeats)
        .map(|_| time_ms(|| transform(&data, &params).map(drop)))
        .collect::<Result<Vec<_>>>()?;
    let naive_ms = if with_naive {
        let mut naive = (0..repeats)
            .map(|_| time_ms(|| transform_naive(&data, &params).map(drop)))
            .collect::<Result<Vec<_>>>()?;
        Some(median(&mut naive))
    } else {
        None
    };
    Ok(BenchRow {
        length,
        examples,
        fast_ms: median(&mut fast),
        naive_ms,
    })
}

/// Time ratios between consecutive rows.
pub fn doubling_ratios(rows: &[BenchRow]) -> Vec<f64> {
    rows.windows(2).map(|w| w[1].fast_ms / w[0].fast_ms).collect()
}

pub fn ratio_is_linear(ratio: f64) -> bool {
    (LINEAR_RATIO_RANGE.0..=LINEAR_RATIO_RANGE.1).contains(&ratio)
}
