//! Filter scores on the feature × label contingency table and on encoded
//! columns: Pearson chi-square, plug-in mutual information, point-biserial r.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::ingest::Dataset;

/// Per-level `[label 0, label 1]` counts for one feature.
pub fn contingency(ds: &Dataset, feature: usize) -> Vec<[f64; 2]> {
    let levels = ds.schema().features[feature].levels.len();
    let mut t = vec![[0.0; 2]; levels];
    for (r, &y) in ds.labels().iter().enumerate() {
        t[ds.level(r, feature)][usize::from(y)] += 1.0;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square (no continuity correction) on an r × 2 table.
pub fn chi_square_table(table: &[[f64; 2]]) -> Result<ChiSquare> {
    let n: f64 = table.iter().map(|r| r[0] + r[1]).sum();
    let cols = [
        table.iter().map(|r| r[0]).sum::<f64>(),
        table.iter().map(|r| r[1]).sum::<f64>(),
    ];
    if table.len() < 2 || cols.contains(&0.0) || table.iter().any(|r| r[0] + r[1] == 0.0) {
        return Err(Error::DegenerateTable(format!(
            "{} rows with a zero marginal",
            table.len()
        )));
    }
    let mut stat = 0.0;
    for r in table {
        let row = r[0] + r[1];
        for c in 0..2 {
            let e = row * cols[c] / n;
            stat += (r[c] - e) * (r[c] - e) / e;
        }
    }
    let dof = table.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| d.sf(stat))
        .unwrap_or(f64::NAN);
    Ok(ChiSquare {
        statistic: stat,
        dof,
        p_value,
    })
}

/// Chi-square for one feature; levels absent from the data are dropped
/// before testing.
pub fn chi_square_feature(ds: &Dataset, feature: usize) -> Result<ChiSquare> {
    let observed: Vec<[f64; 2]> = contingency(ds, feature)
        .into_iter()
        .filter(|r| r[0] + r[1] > 0.0)
        .collect();
    chi_square_table(&observed)
        .map_err(|_| Error::DegenerateTable(ds.schema().features[feature].name.clone()))
}

/// Σ p(x,y) ln[p(x,y) / (p(x) p(y))] in nats.
pub fn mutual_information_table(table: &[[f64; 2]]) -> f64 {
    let n: f64 = table.iter().map(|r| r[0] + r[1]).sum();
    if n == 0.0 {
        return 0.0;
    }
    let cols = [
        table.iter().map(|r| r[0]).sum::<f64>(),
        table.iter().map(|r| r[1]).sum::<f64>(),
    ];
    let mut mi = 0.0;
    for r in table {
        let row = r[0] + r[1];
        for c in 0..2 {
            if r[c] > 0.0 {
                mi += r[c] / n * (r[c] * n / (row * cols[c])).ln();
            }
        }
    }
    mi.max(0.0)
}

pub fn mutual_information_feature(ds: &Dataset, feature: usize) -> f64 {
    mutual_information_table(&contingency(ds, feature))
}

/// Pearson correlation of a numeric column with a 0/1 label.
pub fn point_biserial(column: &[f64], y: &[u8]) -> Result<f64> {
    if column.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            got: column.len(),
        });
    }
    let n = y.len() as f64;
    let mx = column.iter().sum::<f64>() / n;
    let my = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &v) in column.iter().zip(y) {
        let (dx, dy) = (x - mx, f64::from(v) - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(if sxx == 0.0 {
            "constant column".into()
        } else {
            "constant label".into()
        }));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
