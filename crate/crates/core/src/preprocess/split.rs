use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::rng::rng_from_seed;
use crate::table::LabelVector;

/// Row indices of a stratified train/test partition, both sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
}

/// Number of test slots per class.
///
/// Each class gets the floor of its exact quota `n_c * fraction`; the slots
/// left over to reach `round(n * fraction)` go to the classes with the largest
/// fractional remainders (lower class first on ties).
pub fn allocate_test_slots(class_sizes: &[usize], test_fraction: f64) -> Vec<usize> {
    let n: usize = class_sizes.iter().sum();
    let total = (n as f64 * test_fraction).round() as usize;
    let quotas: Vec<f64> = class_sizes.iter().map(|&c| c as f64 * test_fraction).collect();
    let mut slots: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..class_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(slots.iter().sum());
    for &class in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if slots[class] < class_sizes[class] {
            slots[class] += 1;
            remaining -= 1;
        }
    }
    slots
}

pub fn stratified_split(
    labels: &LabelVector,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices, PreprocessError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(PreprocessError::InvalidParameter(format!(
            "test fraction {test_fraction} is outside (0, 1)"
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (row, label) in labels.iter().enumerate() {
        by_class[label as usize].push(row);
    }
    if let Some(class) = by_class.iter().position(Vec::is_empty) {
        return Err(PreprocessError::EmptyClass(class as u8));
    }
    let slots = allocate_test_slots(&[by_class[0].len(), by_class[1].len()], test_fraction);

    let mut rng = rng_from_seed(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (members, &n_test) in by_class.iter_mut().zip(&slots) {
        members.shuffle(&mut rng);
        test_rows.extend_from_slice(&members[..n_test]);
        train_rows.extend_from_slice(&members[n_test..]);
    }
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(PreprocessError::DegenerateSplit {
            train: train_rows.len(),
            test: test_rows.len(),
        });
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitIndices {
        train_rows,
        test_rows,
        seed,
    })
}
