//! Seeded synthetic process matrices for benchmarks and scale tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trace::{Label, LabeledDataset, ProcessVector, Vocabulary};

/// `processes` sparse count vectors over `calls` calls.
///
/// Normal processes draw from the first half of the vocabulary, abnormal ones
/// from the whole of it with heavier counts; roughly `abnormal_fraction` of
/// rows are abnormal.
pub fn generate(processes: usize, calls: usize, abnormal_fraction: f64, seed: u64) -> LabeledDataset {
    assert!(calls > 0, "need at least one call");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocabulary = Vocabulary::new((0..calls).map(|s| format!("call{s}"))).expect("generated names are unique");
    let normal_span = calls.div_ceil(2);
    let mut rows = Vec::with_capacity(processes);
    let mut labels = Vec::with_capacity(processes);
    for i in 0..processes {
        let label = if rng.random_bool(abnormal_fraction.clamp(0.0, 1.0)) {
            Label::Abnormal
        } else {
            Label::Normal
        };
        let (span, density, max) = match label {
            Label::Normal => (normal_span, 0.4, 4),
            Label::Abnormal => (calls, 0.6, 10),
        };
        let counts = (0..calls)
            .map(|s| {
                if s < span && rng.random_bool(density) {
                    rng.random_range(1..=max)
                } else {
                    0
                }
            })
            .collect();
        rows.push(ProcessVector::new(format!("syn{i}"), counts));
        labels.push(label);
    }
    LabeledDataset::new(vocabulary, rows, Some(labels)).expect("generated dataset is valid")
}
