//! Multiplication-free transform.
//!
//! Per series and dilation, `-X` and `3X` are formed once. The output of an
//! all-`-1` kernel (`C_alpha`) is accumulated once and shared by all 84
//! kernels; each kernel then adds the three pre-aligned copies of `3X` at its
//! `+2` positions, since `2 = -1 + 3`.

use std::ops::Range;

use rayon::prelude::*;

use crate::bias::TransformParameters;
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::kernels::{KERNEL_INDICES, KERNEL_LENGTH};

/// Working vectors for one series: `-X` and `3X` with room for zero padding
/// on both sides, `C_alpha`, a partial sum for the first two `+2` positions,
/// and `C`. The nine aligned copies of `3X` are views into the padded buffer,
/// which keeps the working set small enough to stay in cache.
#[derive(Debug, Clone)]
pub struct ConvolutionScratch {
    len: usize,
    x: Vec<f64>,
    neg: Vec<f64>,
    tripled: Vec<f64>,
    c_alpha: Vec<f64>,
    /// `C_alpha` plus the aligned copies at `pair_key`.
    pair: Vec<f64>,
    pair_key: Option<(usize, usize)>,
    c: Vec<f64>,
    dilation: Option<usize>,
}

impl ConvolutionScratch {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            x: vec![0.0; len],
            neg: vec![0.0; 2 * len],
            tripled: vec![0.0; 2 * len],
            c_alpha: vec![0.0; len],
            pair: vec![0.0; len],
            pair_key: None,
            c: vec![0.0; len],
            dilation: None,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Loads a series.
    pub fn load(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.len, "series length does not match scratch");
        self.x.copy_from_slice(x);
        self.dilation = None;
        self.pair_key = None;
    }

    /// Lays out `-X` and `3X` with `4 * dilation` zeros on each side and
    /// builds the shared `C_alpha`. Caller guarantees `8 * dilation <= len - 1`.
    pub fn prepare(&mut self, dilation: usize) {
        debug_assert!(8 * dilation < self.len);
        let len = self.len;
        let pad = 4 * dilation;
        let padded = len + 2 * pad;
        for buf in [&mut self.neg, &mut self.tripled] {
            buf[..pad].fill(0.0);
            buf[pad + len..padded].fill(0.0);
        }
        for ((n, t), &v) in self.neg[pad..pad + len]
            .iter_mut()
            .zip(&mut self.tripled[pad..pad + len])
            .zip(&self.x)
        {
            *n = -v;
            *t = 3.0 * v;
        }
        self.c_alpha.copy_from_slice(&self.neg[pad..pad + len]);
        for j in (0..KERNEL_LENGTH).filter(|&j| j != 4) {
            let shifted = &self.neg[j * dilation..j * dilation + len];
            for (c, &a) in self.c_alpha.iter_mut().zip(shifted) {
                *c += a;
            }
        }
        self.dilation = Some(dilation);
        self.pair_key = None;
    }

    /// `C = C_alpha + C_gamma` for the kernel with `+2` weights at `triple`.
    /// Padded, full length.
    pub fn kernel_output(&mut self, triple: [usize; 3]) -> &[f64] {
        self.pooled_output(triple, 0..self.len)
    }

    /// `C[range]` for the kernel at `triple`. Consecutive kernels sharing
    /// their first two `+2` positions reuse a partial sum.
    pub(crate) fn pooled_output(&mut self, triple: [usize; 3], range: Range<usize>) -> &[f64] {
        debug_assert!(self.dilation.is_some(), "prepare() not called");
        let [a, b, c] = triple;
        let (len, d) = (self.len, self.dilation.unwrap_or(0));
        // `3X` aligned so that output[i] reads x[i + (j - 4) * dilation].
        let aligned = |j: usize| &self.tripled[j * d..j * d + len];
        if self.pair_key != Some((a, b)) {
            let (ga, gb) = (aligned(a), aligned(b));
            for (((p, &alpha), &x), &y) in self.pair.iter_mut().zip(&self.c_alpha).zip(ga).zip(gb) {
                *p = alpha + x + y;
            }
            self.pair_key = Some((a, b));
        }
        let gc = &aligned(c)[range.clone()];
        let out = &mut self.c[range.clone()];
        for ((o, &p), &z) in out.iter_mut().zip(&self.pair[range]).zip(gc) {
            *o = p + z;
        }
        out
    }
}

/// Centered, zero-padded dilated convolution of `x` with one kernel.
pub fn convolve_one(x: &[f64], triple: [usize; 3], dilation: usize) -> Result<Vec<f64>> {
    crate::kernels::kernel_weights(triple)?;
    check_dilation(x.len(), dilation)?;
    let mut scratch = ConvolutionScratch::new(x.len());
    scratch.load(x);
    scratch.prepare(dilation);
    Ok(scratch.kernel_output(triple).to_vec())
}

pub(crate) fn check_dilation(len: usize, dilation: usize) -> Result<()> {
    if len < KERNEL_LENGTH {
        return Err(Error::UnsupportedLength(len));
    }
    if dilation == 0 || 8 * dilation > len - 1 {
        return Err(Error::DilationTooLarge { dilation, length: len });
    }
    Ok(())
}

/// Number of entries strictly greater than `bias`.
#[inline]
pub(crate) fn count_above(values: &[f64], bias: f64) -> usize {
    // Branch-free so the compiler can vectorize the comparison.
    values.iter().map(|&v| (v > bias) as usize).sum()
}

/// Proportion of positive values: fraction of `c` strictly above `bias`.
pub fn ppv(c: &[f64], bias: f64) -> Result<f64> {
    if c.is_empty() {
        return Err(Error::Empty("convolution output"));
    }
    Ok(count_above(c, bias) as f64 / c.len() as f64)
}

/// Examples x features, row-major. Entries are PPV values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.cols.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            values,
        }
    }

    /// Stacks row blocks with equal column counts.
    pub fn vstack(blocks: &[FeatureMatrix]) -> Result<Self> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::InvalidArgument(
                "cannot stack matrices with different widths".into(),
            ));
        }
        let values: Vec<f64> = blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        Ok(Self {
            rows: blocks.iter().map(|b| b.rows).sum(),
            cols,
            values,
        })
    }
}

/// Computes the full feature matrix. Parallel over examples on the current
/// rayon pool; output does not depend on the number of threads.
pub fn transform(dataset: &TimeSeriesDataset, params: &TransformParameters) -> Result<FeatureMatrix> {
    transform_impl(dataset, params, false)
}

/// Same as [`transform`] with the padding parity rule inverted. Only used to
/// check that the oracle self-test detects a broken transform.
#[doc(hidden)]
pub fn transform_with_parity_fault(dataset: &TimeSeriesDataset, params: &TransformParameters) -> Result<FeatureMatrix> {
    transform_impl(dataset, params, true)
}

fn transform_impl(
    dataset: &TimeSeriesDataset,
    params: &TransformParameters,
    flip_parity: bool,
) -> Result<FeatureMatrix> {
    params.validate()?;
    let plan = &params.plan;
    if dataset.series_length() != plan.input_length {
        return Err(Error::LengthMismatch {
            expected: plan.input_length,
            found: dataset.series_length(),
        });
    }
    let cols = plan.total_features();
    let mut out = FeatureMatrix::zeros(dataset.len(), cols);
    if cols == 0 || dataset.is_empty() {
        return Ok(out);
    }
    let len = plan.input_length;

    out.values.par_chunks_mut(cols).enumerate().for_each_init(
        || ConvolutionScratch::new(len),
        |scratch, (i, row)| {
            scratch.load(dataset.series(i));
            let mut start = 0;
            for (dilation_index, (&dilation, &per_kernel)) in
                plan.dilations.iter().zip(&plan.features_per_dilation).enumerate()
            {
                scratch.prepare(dilation);
                let trim = 4 * dilation;
                for (kernel_index, &triple) in KERNEL_INDICES.iter().enumerate() {
                    let padded = ((dilation_index + kernel_index) % 2 == 0) != flip_parity;
                    let range = if padded { 0..len } else { trim..len - trim };
                    let end = start + per_kernel;
                    let biases = &params.biases[start..end];
                    let pooled = scratch.pooled_output(triple, range);
                    let n = pooled.len() as f64;
                    for (f, &b) in row[start..end].iter_mut().zip(biases) {
                        *f = count_above(pooled, b) as f64 / n;
                    }
                    start = end;
                }
            }
        },
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::kernel_weights;
    use crate::oracle::convolve_naive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ppv_counts_strictly_positive() {
        assert_eq!(ppv(&[1.0, 2.0, 3.0], 0.0).unwrap(), 1.0);
        assert_eq!(ppv(&[-1.0, 0.0, 1.0], 0.0).unwrap(), 1.0 / 3.0);
        assert_eq!(ppv(&[0.0, 0.0, 0.0], 0.0).unwrap(), 0.0);
        assert!(matches!(ppv(&[], 0.0), Err(Error::Empty(_))));
    }

    #[test]
    fn zero_series_gives_zero_output() {
        let out = convolve_one(&[0.0; 40], [2, 5, 7], 3).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_series_vanishes_away_from_padding() {
        let x = vec![4.25; 50];
        for d in 1..=6 {
            let out = convolve_one(&x, [1, 3, 8], d).unwrap();
            assert!(out[4 * d..50 - 4 * d].iter().all(|&v| v == 0.0));
            // Near the ends part of the kernel reads zero padding, so the
            // in-range weights no longer cancel.
            let expected = convolve_naive(&x, &kernel_weights([1, 3, 8]).unwrap().weights, d).unwrap();
            assert_eq!(out, expected);
        }
    }

    #[test]
    fn impulse_gives_reversed_kernel() {
        let mut x = vec![0.0; 21];
        x[10] = 1.0;
        let out = convolve_one(&x, [6, 7, 8], 1).unwrap();
        // output[i] = w[10 - i + 4]
        let w = kernel_weights([6, 7, 8]).unwrap().weights;
        for (i, &v) in out.iter().enumerate() {
            let j = 14isize - i as isize;
            let expected = if (0..9).contains(&j) { w[j as usize] } else { 0.0 };
            assert_eq!(v, expected, "position {i}");
        }
        assert_eq!(&out[6..15], &[2.0, 2.0, 2.0, -1.0, -1.0, -1.0, -1.0, -1.0, -1.0]);
    }

    #[test]
    fn matches_naive_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let len = rng.random_range(9..300);
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-10.0..10.0)).collect();
            let triple = KERNEL_INDICES[rng.random_range(0..84)];
            let d = rng.random_range(1..=(len - 1) / 8);
            let fast = convolve_one(&x, triple, d).unwrap();
            let naive = convolve_naive(&x, &kernel_weights(triple).unwrap().weights, d).unwrap();
            for (a, b) in fast.iter().zip(&naive) {
                worst = worst.max((a - b).abs());
            }
        }
        assert!(worst <= 1e-9, "max deviation {worst}");
    }

    #[test]
    fn oversized_dilation_rejected() {
        let x = vec![1.0; 17];
        assert!(convolve_one(&x, [0, 1, 2], 2).is_ok());
        assert!(matches!(
            convolve_one(&x, [0, 1, 2], 3),
            Err(Error::DilationTooLarge { .. })
        ));
        assert!(convolve_one(&x, [0, 1, 9], 1).is_err());
    }
}
