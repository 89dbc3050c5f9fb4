//! The fixed kernel set, dilation schedule, feature allocation and quantile
//! sequence. Everything here is deterministic; bias fitting lives in
//! [`crate::bias`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel length.
pub const KERNEL_LENGTH: usize = 9;
/// Number of kernels: all 3-combinations of 9 positions.
pub const NUM_KERNELS: usize = 84;
/// Weight at the six non-selected positions.
pub const ALPHA: f64 = -1.0;
/// Weight at the three selected positions.
pub const BETA: f64 = 2.0;
pub const DEFAULT_NUM_FEATURES: usize = 9996;
pub const DEFAULT_MAX_DILATIONS_PER_KERNEL: usize = 32;

const fn build_indices() -> [[usize; 3]; NUM_KERNELS] {
    let mut out = [[0usize; 3]; NUM_KERNELS];
    let mut n = 0;
    let mut a = 0;
    while a < KERNEL_LENGTH {
        let mut b = a + 1;
        while b < KERNEL_LENGTH {
            let mut c = b + 1;
            while c < KERNEL_LENGTH {
                out[n] = [a, b, c];
                n += 1;
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

/// Positions of the `BETA` weights for every kernel, in lexicographic order.
pub const KERNEL_INDICES: [[usize; 3]; NUM_KERNELS] = build_indices();

/// The 84 index triples marking where each kernel carries weight `BETA`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelIndexSet {
    triples: &'static [[usize; 3]; NUM_KERNELS],
}

impl KernelIndexSet {
    pub fn triples(&self) -> &'static [[usize; 3]] {
        self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.triples.iter().copied()
    }
}

pub fn generate_kernel_indices() -> KernelIndexSet {
    KernelIndexSet {
        triples: &KERNEL_INDICES,
    }
}

/// A length-9 two-valued kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub weights: [f64; KERNEL_LENGTH],
    pub beta_indices: [usize; 3],
}

pub fn kernel_weights(triple: [usize; 3]) -> Result<Kernel> {
    let [a, b, c] = triple;
    if !(a < b && b < c && c < KERNEL_LENGTH) {
        return Err(Error::InvalidKernel(triple));
    }
    let mut weights = [ALPHA; KERNEL_LENGTH];
    for i in triple {
        weights[i] = BETA;
    }
    Ok(Kernel {
        weights,
        beta_indices: triple,
    })
}

/// Dilations and the number of features computed per kernel at each one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationPlan {
    pub dilations: Vec<usize>,
    /// Per kernel, aligned with `dilations`.
    pub features_per_dilation: Vec<usize>,
    pub max_exponent: f64,
    pub input_length: usize,
    /// Requested feature count (before rounding down to a multiple of 84).
    pub num_features: usize,
    pub max_dilations_per_kernel: usize,
}

impl DilationPlan {
    /// Features computed per kernel, summed over dilations.
    pub fn features_per_kernel(&self) -> usize {
        self.features_per_dilation.iter().sum()
    }

    pub fn total_features(&self) -> usize {
        NUM_KERNELS * self.features_per_kernel()
    }

    /// Number of (dilation, kernel) combinations.
    pub fn num_combinations(&self) -> usize {
        NUM_KERNELS * self.dilations.len()
    }

    /// Iterates combinations in feature layout order: dilation-major, then
    /// kernel. Yields the feature slot range owned by each combination.
    pub fn combinations(&self) -> impl Iterator<Item = Combination> + '_ {
        let mut start = 0;
        self.dilations
            .iter()
            .zip(&self.features_per_dilation)
            .enumerate()
            .flat_map(move |(dilation_index, (&dilation, &count))| {
                (0..NUM_KERNELS).map(move |kernel_index| (dilation_index, dilation, count, kernel_index))
            })
            .enumerate()
            .map(move |(index, (dilation_index, dilation, count, kernel_index))| {
                let combo = Combination {
                    index,
                    dilation_index,
                    dilation,
                    kernel_index,
                    features: start..start + count,
                };
                start += count;
                combo
            })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.dilations.is_empty() || self.dilations.len() != self.features_per_dilation.len() {
            return Err(Error::LayoutMismatch(format!(
                "{} dilations but {} feature counts",
                self.dilations.len(),
                self.features_per_dilation.len()
            )));
        }
        if self.input_length < KERNEL_LENGTH {
            return Err(Error::UnsupportedLength(self.input_length));
        }
        if !self.dilations.windows(2).all(|w| w[0] < w[1]) || self.dilations[0] == 0 {
            return Err(Error::LayoutMismatch(
                "dilations must be positive and strictly ascending".into(),
            ));
        }
        if let Some(&d) = self.dilations.iter().find(|&&d| 8 * d > self.input_length - 1) {
            return Err(Error::DilationTooLarge {
                dilation: d,
                length: self.input_length,
            });
        }
        if self.features_per_dilation.contains(&0) {
            return Err(Error::LayoutMismatch(
                "every dilation needs at least one feature".into(),
            ));
        }
        Ok(())
    }
}

/// One (dilation, kernel) pair and the feature columns it fills.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Combination {
    pub index: usize,
    pub dilation_index: usize,
    pub dilation: usize,
    pub kernel_index: usize,
    pub features: std::ops::Range<usize>,
}

impl Combination {
    /// Half of all combinations pool over the padded output; the rest drop
    /// `4 * dilation` values from each end first.
    pub fn padded(&self) -> bool {
        (self.dilation_index + self.kernel_index).is_multiple_of(2)
    }
}

pub fn plan_dilations(
    input_length: usize,
    num_features: usize,
    max_dilations_per_kernel: usize,
) -> Result<DilationPlan> {
    if input_length < KERNEL_LENGTH {
        return Err(Error::UnsupportedLength(input_length));
    }
    if num_features < NUM_KERNELS {
        return Err(Error::InvalidArgument(format!(
            "num_features must be at least {NUM_KERNELS}, got {num_features}"
        )));
    }
    if max_dilations_per_kernel == 0 {
        return Err(Error::InvalidArgument(
            "max_dilations_per_kernel must be positive".into(),
        ));
    }

    let per_kernel = num_features / NUM_KERNELS;
    let grid_size = per_kernel.min(max_dilations_per_kernel);
    let max_exponent = ((input_length - 1) as f64 / (KERNEL_LENGTH - 1) as f64).log2();

    let mut dilations: Vec<usize> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for i in 0..grid_size {
        let exponent = if grid_size == 1 {
            0.0
        } else {
            i as f64 * max_exponent / (grid_size - 1) as f64
        };
        // Grid values are non-decreasing in i, so duplicates are adjacent.
        let d = (exponent.exp2().floor() as usize).max(1);
        match dilations.last() {
            Some(&last) if last == d => *counts.last_mut().unwrap() += 1,
            _ => {
                dilations.push(d);
                counts.push(1);
            }
        }
    }
    // 2^max_exponent can land a hair above (L-1)/8 in floating point.
    while let Some(&d) = dilations.last() {
        if 8 * d < input_length {
            break;
        }
        dilations.pop();
        let extra = counts.pop().unwrap();
        if let Some(c) = counts.last_mut() {
            *c += extra;
        }
    }

    let mut features_per_dilation: Vec<usize> = counts.iter().map(|&c| c * per_kernel / grid_size).collect();
    let remainder = per_kernel - features_per_dilation.iter().sum::<usize>();
    for f in features_per_dilation.iter_mut().take(remainder) {
        *f += 1;
    }

    Ok(DilationPlan {
        dilations,
        features_per_dilation,
        max_exponent,
        input_length,
        num_features,
        max_dilations_per_kernel,
    })
}

/// Golden-ratio low-discrepancy sequence `i * phi mod 1` for `i = 1..=count`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSequence {
    pub values: Vec<f64>,
}

pub fn quantile_sequence(count: usize) -> QuantileSequence {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    QuantileSequence {
        values: (1..=count).map(|i| (i as f64 * phi) % 1.0).collect(),
    }
}

pub fn total_num_features(num_features: usize) -> Result<usize> {
    if num_features < NUM_KERNELS {
        return Err(Error::InvalidArgument(format!(
            "num_features must be at least {NUM_KERNELS}, got {num_features}"
        )));
    }
    Ok(NUM_KERNELS * (num_features / NUM_KERNELS))
}
