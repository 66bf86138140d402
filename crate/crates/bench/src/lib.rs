//! Shared inputs for the criterion benchmarks.

use idsim_core::synthetic;
use idsim_core::LabeledDataset;

/// Fixed-seed workload of `processes` rows over the 50-call vocabulary width.
pub fn workload(processes: usize) -> LabeledDataset {
    synthetic::generate(processes, 50, 0.2, 0x5eed)
}
