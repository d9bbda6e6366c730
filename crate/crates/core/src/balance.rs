//! SMOTE oversampling of the minority class.
//!
//! Only ever called on training rows; the cross-validation engine invokes it
//! once per training fold and uses the synthetic flags to audit that no
//! generated row reaches a validation fold.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired minority/majority ratio after resampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::InvalidConfig(
                "smote k_neighbors must be >= 1".into(),
            ));
        }
        if !(self.target_ratio > 0.0 && self.target_ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "smote target_ratio must lie in (0, 1], got {}",
                self.target_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampledSet {
    /// Original rows first, in input order, then synthetic rows.
    pub matrix: Matrix,
    pub labels: Vec<u8>,
    pub synthetic: Vec<bool>,
    /// For each synthetic row, the (base, neighbour) input row indices.
    pub parents: Vec<(usize, usize)>,
    pub minority_label: u8,
}

impl ResampledSet {
    pub fn n_synthetic(&self) -> usize {
        self.parents.len()
    }
}

/// `a + λ(b − a)`.
pub fn interpolate(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + lambda * (y - x)).collect()
}

/// Number of synthetic rows that brings the ratio to `target_ratio`.
pub fn synthetic_count(minority: usize, majority: usize, target_ratio: f64) -> usize {
    let want = (target_ratio * majority as f64).round() as usize;
    want.saturating_sub(minority)
}

/// The k nearest other members of `pool` for each member, by Euclidean
/// distance with ties broken by row index.
fn neighbour_lists(x: &Matrix, pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    pool.iter()
        .map(|&i| {
            let mut cand: Vec<(f64, usize)> = pool
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (sq_dist(x.row(i), x.row(j)), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Oversample the minority class of `(x, y)`. Base rows are visited
/// round-robin in input order; each draw picks one of the base row's k
/// minority neighbours and a gap λ ~ U[0, 1).
pub fn smote_resample(x: &Matrix, y: &[u8], cfg: &SmoteConfig) -> Result<ResampledSet> {
    cfg.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    let ones = y.iter().filter(|&&v| v == 1).count();
    let zeros = y.len() - ones;
    let minority_label = u8::from(ones < zeros);
    let (n_min, n_maj) = if ones < zeros {
        (ones, zeros)
    } else {
        (zeros, ones)
    };
    let needed = synthetic_count(n_min, n_maj, cfg.target_ratio);

    let mut matrix = x.clone();
    let mut labels = y.to_vec();
    let mut synthetic = vec![false; y.len()];
    let mut parents = Vec::with_capacity(needed);
    if needed == 0 {
        return Ok(ResampledSet {
            matrix,
            labels,
            synthetic,
            parents,
            minority_label,
        });
    }
    if n_min < cfg.k_neighbors + 1 {
        return Err(Error::InfeasibleK(format!(
            "minority class has {n_min} rows but k_neighbors={} needs at least {}; reduce k",
            cfg.k_neighbors,
            cfg.k_neighbors + 1
        )));
    }
    let pool: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority_label).collect();
    let nn = neighbour_lists(x, &pool, cfg.k_neighbors);
    let mut rng = rng_from_seed(cfg.seed);
    for s in 0..needed {
        let slot = s % pool.len();
        let base = pool[slot];
        let nb = nn[slot][rng.random_range(0..nn[slot].len())];
        let lambda: f64 = rng.random();
        matrix.push_row(&interpolate(x.row(base), x.row(nb), lambda))?;
        labels.push(minority_label);
        synthetic.push(true);
        parents.push((base, nb));
    }
    Ok(ResampledSet {
        matrix,
        labels,
        synthetic,
        parents,
        minority_label,
    })
}
