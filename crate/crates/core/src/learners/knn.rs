use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, LearnerId};
use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Matrix};

/// Euclidean k-nearest-neighbour vote over the stored training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<u8>,
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[u8], k: usize) -> Result<Self> {
        check_training_data(x, y)?;
        if k == 0 || k > x.nrows() {
            return Err(Error::InvalidHyperParam {
                key: "k".into(),
                detail: format!("need 1 <= k <= {}, got {k}", x.nrows()),
            });
        }
        Ok(KnnModel {
            k,
            x: x.clone(),
            y: y.to_vec(),
        })
    }

    /// Indices of the k nearest stored rows ordered by (distance, row index).
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = self
            .x
            .rows_iter()
            .enumerate()
            .map(|(i, r)| (sq_dist(r, query), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Vote share of class 1. An exact tie gives the nearest neighbour half an
    /// extra vote, so the tie resolves to its label.
    fn score(&self, query: &[f64]) -> f64 {
        let nn = self.neighbors(query);
        let pos = nn.iter().filter(|&&i| self.y[i] == 1).count();
        let k = nn.len() as f64;
        if 2 * pos == nn.len() {
            let nudge = if self.y[nn[0]] == 1 { 0.5 } else { -0.5 };
            (pos as f64 + nudge) / k
        } else {
            pos as f64 / k
        }
    }
}

impl Classifier for KnnModel {
    fn learner(&self) -> LearnerId {
        LearnerId::Knn
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.score(r)).collect()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::json!({ "k": self.k, "n_stored": self.x.nrows() })
    }
}
