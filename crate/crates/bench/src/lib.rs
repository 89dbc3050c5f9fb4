//! Shared workloads for the criterion benches.

use minirocket::{Result, TimeSeriesDataset, TransformParameters};

pub use minirocket::timing::workload;

/// Series lengths swept by the transform benches.
pub const LENGTHS: [usize; 4] = [256, 512, 1024, 2048];

/// Examples per workload. Small enough that the naive side finishes quickly.
pub const EXAMPLES: usize = 20;

pub fn workloads() -> Result<Vec<(TimeSeriesDataset, TransformParameters)>> {
    LENGTHS.iter().map(|&length| workload(length, EXAMPLES, 0)).collect()
}
