use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{ColumnRanks, TreeModel, TreeParams};
use super::{check_training_data, Classifier, LearnerId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_seed_idx, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Columns per split; defaults to round(√d).
    pub m_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            m_features: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub tree_seeds: Vec<u64>,
    pub m_features: usize,
    pub params: ForestParams,
}

pub fn default_m_features(d: usize) -> usize {
    ((d as f64).sqrt().round() as usize).clamp(1, d.max(1))
}

impl ForestModel {
    pub fn fit(x: &Matrix, y: &[u8], params: ForestParams, seed: u64) -> Result<Self> {
        check_training_data(x, y)?;
        if params.n_trees == 0 {
            return Err(Error::InvalidHyperParam {
                key: "n_trees".into(),
                detail: "must be >= 1".into(),
            });
        }
        let d = x.ncols();
        let m = params
            .m_features
            .unwrap_or_else(|| default_m_features(d))
            .clamp(1, d);
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf.max(1),
            m_features: Some(m),
        };
        let n = x.nrows();
        let index = ColumnRanks::new(x);
        let tree_seeds: Vec<u64> = (0..params.n_trees as u64)
            .map(|t| derive_seed_idx(seed, t))
            .collect();
        let trees = tree_seeds
            .par_iter()
            .map(|&s| {
                let mut rng = rng_from_seed(s);
                let rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                TreeModel::fit_rows(x, &index, y, rows, tree_params, Some(&mut rng))
            })
            .collect();
        Ok(ForestModel {
            trees,
            tree_seeds,
            m_features: m,
            params,
        })
    }

    /// Mean decrease in impurity, averaged over trees.
    pub fn importances(&self) -> Vec<f64> {
        let d = self.trees.first().map_or(0, |t| t.n_features);
        let mut imp = vec![0.0; d];
        for t in &self.trees {
            for (a, b) in imp.iter_mut().zip(&t.importances) {
                *a += b;
            }
        }
        let k = self.trees.len() as f64;
        imp.iter_mut().for_each(|v| *v /= k);
        imp
    }

    /// Out-of-bag permutation importance scaled to a z-score: for each tree,
    /// the drop in OOB accuracy after shuffling a column among that tree's
    /// OOB rows, then mean / standard error across trees. Needs the training
    /// data the forest was fitted on; zero everywhere without bootstrap.
    pub fn permutation_importance(&self, x: &Matrix, y: &[u8], seed: u64) -> Vec<f64> {
        let (n, d) = (x.nrows(), x.ncols());
        if !self.params.bootstrap || n != y.len() {
            return vec![0.0; d];
        }
        let drops: Vec<Vec<f64>> = self
            .trees
            .par_iter()
            .zip(&self.tree_seeds)
            .enumerate()
            .map(|(t, (tree, &s))| {
                let mut rng = rng_from_seed(s);
                let mut in_bag = vec![false; n];
                for _ in 0..n {
                    in_bag[rng.random_range(0..n)] = true;
                }
                let oob: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
                let mut out = vec![0.0; d];
                if oob.is_empty() {
                    return out;
                }
                let hit = |p: f64, i: usize| u8::from(p >= 0.5) == y[i];
                let base: Vec<bool> = oob
                    .iter()
                    .map(|&i| hit(tree.proba_row(x.row(i)), i))
                    .collect();
                // a shuffled column can only move rows whose path tests it
                let mut touched: Vec<Vec<usize>> = vec![Vec::new(); d];
                for (pos, &i) in oob.iter().enumerate() {
                    let mut path = tree.path_features(x.row(i));
                    path.sort_unstable();
                    path.dedup();
                    for f in path {
                        touched[f].push(pos);
                    }
                }
                let used = tree.used_features();
                let mut prng = rng_from_seed(derive_seed_idx(seed, t as u64));
                for j in (0..d).filter(|&j| used[j]) {
                    let mut donors = oob.clone();
                    donors.shuffle(&mut prng);
                    let lost: i64 = touched[j]
                        .iter()
                        .map(|&pos| {
                            let i = oob[pos];
                            let now =
                                hit(tree.proba_row_with(x.row(i), j, x.get(donors[pos], j)), i);
                            i64::from(base[pos]) - i64::from(now)
                        })
                        .sum();
                    out[j] = lost as f64 / oob.len() as f64;
                }
                out
            })
            .collect();
        let k = drops.len() as f64;
        (0..d)
            .map(|j| {
                let mean = drops.iter().map(|v| v[j]).sum::<f64>() / k;
                let var =
                    drops.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
                let se = (var / k).sqrt();
                if se > 0.0 {
                    mean / se
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Hard majority vote of the trees' labels; an even split votes 1.
    pub fn vote(&self, x: &Matrix) -> Vec<u8> {
        x.rows_iter()
            .map(|r| {
                let votes: Vec<u8> = self
                    .trees
                    .iter()
                    .map(|t| u8::from(t.proba_row(r) >= 0.5))
                    .collect();
                majority(&votes)
            })
            .collect()
    }
}

/// Mode of binary votes; ties go to 1.
pub fn majority(votes: &[u8]) -> u8 {
    let ones = votes.iter().filter(|&&v| v == 1).count();
    u8::from(2 * ones >= votes.len())
}

impl Classifier for ForestModel {
    fn learner(&self) -> LearnerId {
        LearnerId::Rf
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        x.rows_iter()
            .map(|r| self.trees.iter().map(|t| t.proba_row(r)).sum::<f64>() / k)
            .collect()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}
