//! Categorical naive Bayes with Laplace smoothing. Encoded columns are read
//! as category codes by rounding to the nearest non-negative integer.

use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, LearnerId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub alpha: f64,
    pub class_counts: [f64; 2],
    pub log_prior: [f64; 2],
    /// Per column: number of levels seen in training.
    pub n_levels: Vec<usize>,
    /// Per column, per class: smoothed log P(level | class).
    pub log_cond: Vec<[Vec<f64>; 2]>,
}

#[inline]
fn code(v: f64) -> usize {
    if v.is_finite() && v > 0.0 {
        v.round() as usize
    } else {
        0
    }
}

impl NbModel {
    pub fn fit(x: &Matrix, y: &[u8], alpha: f64) -> Result<Self> {
        check_training_data(x, y)?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidHyperParam {
                key: "alpha".into(),
                detail: format!("must be positive, got {alpha}"),
            });
        }
        let n = x.nrows() as f64;
        let pos = y.iter().filter(|&&v| v == 1).count() as f64;
        let class_counts = [n - pos, pos];
        let log_prior = [(class_counts[0] / n).ln(), (class_counts[1] / n).ln()];
        let mut n_levels = Vec::with_capacity(x.ncols());
        let mut log_cond = Vec::with_capacity(x.ncols());
        for j in 0..x.ncols() {
            let levels = (0..x.nrows()).map(|i| code(x.get(i, j))).max().unwrap_or(0) + 1;
            let mut counts = [vec![0.0; levels], vec![0.0; levels]];
            for (i, &yi) in y.iter().enumerate() {
                counts[yi as usize][code(x.get(i, j))] += 1.0;
            }
            let table = [0, 1].map(|k| {
                let denom = class_counts[k] + alpha * levels as f64;
                counts[k]
                    .iter()
                    .map(|c| ((c + alpha) / denom).ln())
                    .collect::<Vec<f64>>()
            });
            n_levels.push(levels);
            log_cond.push(table);
        }
        Ok(NbModel {
            alpha,
            class_counts,
            log_prior,
            n_levels,
            log_cond,
        })
    }

    /// log P(level | class); levels unseen in training get the smoothing floor
    /// α / (count_k + α·levels).
    pub fn log_conditional(&self, column: usize, value: f64, class: usize) -> f64 {
        let c = code(value);
        match self.log_cond[column][class].get(c) {
            Some(v) => *v,
            None => {
                let levels = self.n_levels[column] as f64;
                (self.alpha / (self.class_counts[class] + self.alpha * levels)).ln()
            }
        }
    }

    /// Posterior [P(0|x), P(1|x)] via log-sum-exp.
    pub fn posterior(&self, row: &[f64]) -> [f64; 2] {
        let mut lp = self.log_prior;
        for (j, &v) in row.iter().enumerate() {
            for (k, l) in lp.iter_mut().enumerate() {
                *l += self.log_conditional(j, v, k);
            }
        }
        let m = lp[0].max(lp[1]);
        let e = [(lp[0] - m).exp(), (lp[1] - m).exp()];
        let z = e[0] + e[1];
        [e[0] / z, e[1] / z]
    }
}

impl Classifier for NbModel {
    fn learner(&self) -> LearnerId {
        LearnerId::Nb
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.posterior(r)[1]).collect()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}
