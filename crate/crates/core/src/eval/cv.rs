//! Repeated stratified k-fold plans.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed_idx, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub n_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
    /// `assignment[repeat][row]` is the validation fold of `row`.
    pub assignment: Vec<Vec<usize>>,
}

/// One (repeat, fold) split as sorted row indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub repeat: usize,
    pub fold: usize,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Each repeat shuffles every class independently and deals rows to folds
/// round-robin, continuing the deal across classes so fold sizes also stay
/// within one row of each other.
pub fn make_cv_plan(labels: &[u8], n_folds: usize, n_repeats: usize, seed: u64) -> Result<CvPlan> {
    if n_folds < 2 || n_repeats == 0 {
        return Err(Error::InvalidConfig(format!(
            "need n_folds >= 2 and n_repeats >= 1, got {n_folds} and {n_repeats}"
        )));
    }
    for class in 0..=1u8 {
        let c = labels.iter().filter(|&&y| y == class).count();
        if c < n_folds {
            return Err(Error::StratificationInfeasible(format!(
                "class {class} has {c} rows, fewer than {n_folds} folds"
            )));
        }
    }
    let assignment = (0..n_repeats)
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed_idx(seed, r as u64));
            let mut fold_of = vec![0; labels.len()];
            let mut deal = 0;
            for class in 0..=1u8 {
                let mut rows: Vec<usize> =
                    (0..labels.len()).filter(|&i| labels[i] == class).collect();
                rows.shuffle(&mut rng);
                for i in rows {
                    fold_of[i] = deal % n_folds;
                    deal += 1;
                }
            }
            fold_of
        })
        .collect();
    Ok(CvPlan {
        n_folds,
        n_repeats,
        seed,
        assignment,
    })
}

impl CvPlan {
    pub fn n_rows(&self) -> usize {
        self.assignment.first().map_or(0, Vec::len)
    }

    pub fn fold(&self, repeat: usize, fold: usize) -> Fold {
        let (mut train, mut validation) = (Vec::new(), Vec::new());
        for (i, &f) in self.assignment[repeat].iter().enumerate() {
            if f == fold {
                validation.push(i);
            } else {
                train.push(i);
            }
        }
        Fold {
            repeat,
            fold,
            train,
            validation,
        }
    }

    /// All splits in (repeat, fold) order.
    pub fn folds(&self) -> Vec<Fold> {
        (0..self.n_repeats)
            .flat_map(|r| (0..self.n_folds).map(move |f| (r, f)))
            .map(|(r, f)| self.fold(r, f))
            .collect()
    }
}
