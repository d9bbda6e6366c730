//! Multivariable logistic regression on reference-dropped indicators, with
//! Wald intervals and normal-approximation p-values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::ingest::{encode_treatment, Dataset};
use crate::learners::irls_named;

/// Two-sided 97.5% standard normal quantile.
pub const Z_975: f64 = 1.959_963_984_540_054;

/// `exp(β ± z·se)` for a two-sided interval at `level`.
pub fn wald_ci(beta: f64, se: f64, level: f64) -> Result<(f64, f64)> {
    if !(se >= 0.0 && se.is_finite()) || !beta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "wald interval needs finite beta and se >= 0, got {beta}, {se}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let z = if level == 0.95 {
        Z_975
    } else {
        Normal::standard().inverse_cdf(0.5 + level / 2.0)
    };
    Ok(((beta - z * se).exp(), (beta + z * se).exp()))
}

/// Two-sided p-value for z = β/se.
pub fn wald_p(beta: f64, se: f64) -> f64 {
    let z = (beta / se).abs();
    2.0 * Normal::standard().sf(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedOr {
    pub feature: String,
    pub category: String,
    pub beta: f64,
    pub se: f64,
    pub odds_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_value: f64,
}

/// Adjusted ORs for every non-reference level of every feature in `ds`.
/// Levels that never occur are left out (their indicator is identically
/// zero and carries no information).
pub fn adjusted_or(ds: &Dataset, references: &BTreeMap<String, String>) -> Result<Vec<AdjustedOr>> {
    let enc = encode_treatment(ds, references)?;
    let keep: Vec<usize> = (0..enc.n_cols())
        .filter(|&j| enc.values.rows_iter().any(|r| r[j] != 0.0))
        .collect();
    let x = enc.values.select_cols(&keep);
    let names: Vec<String> = keep.iter().map(|&j| enc.column_map[j].name()).collect();
    let fit = irls_named(&x, ds.labels(), 0.0, &names)?;
    let cov = fit.covariance()?;
    keep.iter()
        .enumerate()
        .map(|(c, &j)| {
            let col = &enc.column_map[j];
            let beta = fit.coef[c];
            let se = cov[(c + 1, c + 1)].sqrt();
            let (ci_low, ci_high) = wald_ci(beta, se, 0.95)?;
            Ok(AdjustedOr {
                feature: col.feature.clone(),
                category: col.level.clone().unwrap_or_default(),
                beta,
                se,
                odds_ratio: beta.exp(),
                ci_low,
                ci_high,
                p_value: wald_p(beta, se),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_fixture() {
        let (lo, hi) = wald_ci(0.0, 0.1, 0.95).unwrap();
        assert!((lo - (-0.1 * Z_975).exp()).abs() < 1e-15);
        assert!((lo - 0.822).abs() < 5e-4 && (hi - 1.217).abs() < 5e-4);
        let (lo, hi) = wald_ci(0.4, 0.0, 0.95).unwrap();
        assert_eq!((lo, hi), (0.4f64.exp(), 0.4f64.exp()));
        assert!(wald_ci(0.0, -1.0, 0.95).is_err());
    }

    #[test]
    fn quantile_matches_constant() {
        let z = Normal::standard().inverse_cdf(0.975);
        assert!((z - Z_975).abs() < 1e-9);
        assert!((wald_p(Z_975, 1.0) - 0.05).abs() < 1e-9);
    }
}
