use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Per-class test allocation: floor of each class quota, then the remaining
/// slots up to `round(n * frac)` go to the largest fractional remainders.
pub fn stratified_allocation(class_counts: &[usize], frac: f64) -> Vec<usize> {
    let n: usize = class_counts.iter().sum();
    let target = (n as f64 * frac).round() as usize;
    let quotas: Vec<f64> = class_counts.iter().map(|&c| c as f64 * frac).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..class_counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = target.saturating_sub(alloc.iter().sum());
    for &c in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if alloc[c] < class_counts[c] {
            alloc[c] += 1;
            remaining -= 1;
        }
    }
    alloc
}

pub fn stratified_split_labels(labels: &[u8], test_frac: f64, seed: u64) -> Result<SplitPlan> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in (0, 1), got {test_frac}"
        )));
    }
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        by_class[usize::from(y == 1)].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::StratificationInfeasible(format!(
                "class {c} has {} member(s); need at least 2",
                members.len()
            )));
        }
    }
    let alloc = stratified_allocation(&[by_class[0].len(), by_class[1].len()], test_frac);
    let mut rng = rng_from_seed(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (members, m) in by_class.iter_mut().zip(alloc) {
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..m]);
        train.extend_from_slice(&members[m..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        train_indices: train,
        test_indices: test,
        seed,
    })
}

pub fn stratified_split(ds: &Dataset, test_frac: f64, seed: u64) -> Result<SplitPlan> {
    stratified_split_labels(ds.labels(), test_frac, seed)
}
