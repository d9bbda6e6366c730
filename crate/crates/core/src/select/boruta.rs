//! All-relevant feature screening: real columns compete against shuffled
//! shadow copies inside a random forest, and a binomial test on the hit
//! counts settles each column.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{Error, Result};
use crate::learners::{ForestModel, ForestParams};
use crate::matrix::Matrix;
use crate::rng::{derive_seed_idx, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorutaConfig {
    pub max_iterations: usize,
    pub n_trees: usize,
    pub significance: f64,
    pub seed: u64,
}

impl Default for BorutaConfig {
    fn default() -> Self {
        BorutaConfig {
            max_iterations: 100,
            n_trees: 100,
            significance: 0.05,
            seed: 0,
        }
    }
}

impl BorutaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 20 {
            return Err(Error::InvalidConfig(
                "boruta max_iterations must be >= 20".into(),
            ));
        }
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("boruta n_trees must be >= 1".into()));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::InvalidConfig(
                "boruta significance must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Rejected,
    Tentative,
    Confirmed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaResult {
    pub verdicts: Vec<Verdict>,
    /// Iterations in which the column beat the best shadow.
    pub hits: Vec<usize>,
    /// Iterations the column took part in.
    pub trials: Vec<usize>,
    pub iterations: usize,
}

impl BorutaResult {
    pub fn hit_rate(&self, col: usize) -> f64 {
        if self.trials[col] == 0 {
            0.0
        } else {
            self.hits[col] as f64 / self.trials[col] as f64
        }
    }
}

pub fn boruta(x: &Matrix, y: &[u8], cfg: &BorutaConfig) -> Result<BorutaResult> {
    cfg.validate()?;
    let (n, d) = (x.nrows(), x.ncols());
    if d < 2 {
        return Err(Error::InvalidInput(
            "boruta needs at least 2 columns".into(),
        ));
    }
    if n < 30 {
        return Err(Error::InvalidInput(format!(
            "boruta needs at least 30 rows, got {n}"
        )));
    }
    // two-sided test split evenly between the tails, Bonferroni across columns
    let tail = cfg.significance / 2.0 / d as f64;
    let mut verdicts = vec![Verdict::Tentative; d];
    let mut hits = vec![0usize; d];
    let mut trials = vec![0usize; d];
    let mut iterations = 0;
    for it in 0..cfg.max_iterations {
        let active: Vec<usize> = (0..d)
            .filter(|&j| verdicts[j] != Verdict::Rejected)
            .collect();
        if active.iter().all(|&j| verdicts[j] == Verdict::Confirmed) {
            break;
        }
        iterations = it + 1;
        let iter_seed = derive_seed_idx(cfg.seed, it as u64);
        let mut rng = rng_from_seed(iter_seed);
        let real = x.select_cols(&active);
        let mut shadow = real.clone();
        for c in 0..active.len() {
            let mut col = real.column(c);
            col.shuffle(&mut rng);
            for (r, v) in col.into_iter().enumerate() {
                shadow.set(r, c, v);
            }
        }
        let both = real.hstack(&shadow)?;
        let forest = ForestModel::fit(
            &both,
            y,
            ForestParams {
                n_trees: cfg.n_trees,
                ..ForestParams::default()
            },
            derive_seed_idx(iter_seed, 1),
        )?;
        let imp = forest.permutation_importance(&both, y, derive_seed_idx(iter_seed, 2));
        let k = active.len();
        let max_shadow = imp[k..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (c, &j) in active.iter().enumerate() {
            trials[j] += 1;
            if imp[c] > max_shadow {
                hits[j] += 1;
            }
        }
        for &j in &active {
            if verdicts[j] != Verdict::Tentative {
                continue;
            }
            let b = Binomial::new(0.5, trials[j] as u64)
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            let h = hits[j] as u64;
            let upper = if h == 0 { 1.0 } else { b.sf(h - 1) };
            if upper < tail {
                verdicts[j] = Verdict::Confirmed;
            } else if b.cdf(h) < tail {
                verdicts[j] = Verdict::Rejected;
            }
        }
    }
    Ok(BorutaResult {
        verdicts,
        hits,
        trials,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_bounds() {
        assert!(BorutaConfig::default().validate().is_ok());
        let short = BorutaConfig {
            max_iterations: 5,
            ..BorutaConfig::default()
        };
        assert!(short.validate().is_err());
    }

    #[test]
    fn strong_signal_is_confirmed_and_constant_is_rejected() {
        let n = 200;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![(i % 2) as f64, 0.0, ((i * 7) % 5) as f64])
            .collect();
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = BorutaConfig {
            max_iterations: 30,
            n_trees: 20,
            ..BorutaConfig::default()
        };
        let r = boruta(&x, &y, &cfg).unwrap();
        assert_eq!(r.verdicts[0], Verdict::Confirmed);
        assert_eq!(r.verdicts[1], Verdict::Rejected);
        assert_eq!(r, boruta(&x, &y, &cfg).unwrap());
    }
}
