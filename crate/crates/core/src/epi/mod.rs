//! Prevalence tables and crude / adjusted odds ratios per category.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;

mod adjusted;

pub use adjusted::{adjusted_or, wald_ci, wald_p, AdjustedOr, Z_975};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyRow {
    pub feature: String,
    pub category: String,
    pub anemic: usize,
    pub not_anemic: usize,
}

impl ContingencyRow {
    pub fn total(&self) -> usize {
        self.anemic + self.not_anemic
    }

    /// Percent of the category that is anemic; `None` for an empty category.
    pub fn prevalence(&self) -> Option<f64> {
        (self.total() > 0).then(|| 100.0 * self.anemic as f64 / self.total() as f64)
    }
}

/// One row per declared level, including levels absent from the data.
pub fn contingency(ds: &Dataset, feature: &str) -> Result<Vec<ContingencyRow>> {
    let fi = ds
        .schema()
        .feature_index(feature)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown feature `{feature}`")))?;
    let spec = &ds.schema().features[fi];
    let mut rows: Vec<ContingencyRow> = spec
        .levels
        .iter()
        .map(|l| ContingencyRow {
            feature: feature.to_string(),
            category: l.clone(),
            anemic: 0,
            not_anemic: 0,
        })
        .collect();
    for (i, &y) in ds.labels().iter().enumerate() {
        let r = &mut rows[ds.level(i, fi)];
        if y == 1 {
            r.anemic += 1;
        } else {
            r.not_anemic += 1;
        }
    }
    Ok(rows)
}

/// `(a·d)/(b·c)` for each row against the `reference` row, where a/b are the
/// row's anemic/not counts and c/d the reference's. Rows with a zero cell
/// get `None` unless `haldane` adds 0.5 to every cell of that comparison.
pub fn crude_or(
    rows: &[ContingencyRow],
    reference: &str,
    haldane: bool,
) -> Result<Vec<Option<f64>>> {
    let r = rows
        .iter()
        .find(|r| r.category == reference)
        .ok_or_else(|| {
            Error::InvalidConfig(format!("reference category `{reference}` not found"))
        })?;
    if !haldane && (r.anemic == 0 || r.not_anemic == 0) {
        return Err(Error::DegenerateTable(format!(
            "reference `{reference}` has a zero count; odds ratios undefined"
        )));
    }
    Ok(rows
        .iter()
        .map(|row| {
            if row.category == reference {
                return Some(1.0);
            }
            let cells = [row.anemic, row.not_anemic, r.anemic, r.not_anemic];
            let zero = cells.contains(&0);
            let shift = if zero && haldane { 0.5 } else { 0.0 };
            if zero && !haldane {
                return None;
            }
            let [a, b, c, d] = cells.map(|v| v as f64 + shift);
            Some((a * d) / (b * c))
        })
        .collect())
}

/// One line of the factors report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddsRatioRow {
    pub feature: String,
    pub category: String,
    pub anemic: usize,
    pub not_anemic: usize,
    pub total: usize,
    pub prevalence_pct: Option<f64>,
    pub is_reference: bool,
    pub crude_or: Option<f64>,
    pub adjusted_or: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactorOptions {
    /// Per-feature reference overrides; the schema reference otherwise.
    pub references: BTreeMap<String, String>,
    pub haldane: bool,
    /// Skip the multivariable model (crude columns only).
    pub crude_only: bool,
}

/// Counts, prevalence, crude and adjusted ORs for every schema feature of
/// `ds`, adjusted for all the others.
pub fn factor_table(ds: &Dataset, opts: &FactorOptions) -> Result<Vec<OddsRatioRow>> {
    let adjusted = if opts.crude_only {
        Vec::new()
    } else {
        adjusted_or(ds, &opts.references)?
    };
    let mut out = Vec::new();
    for spec in &ds.schema().features {
        let reference = opts
            .references
            .get(&spec.name)
            .unwrap_or(&spec.reference_level);
        let rows = contingency(ds, &spec.name)?;
        let crude = crude_or(&rows, reference, opts.haldane)?;
        for (row, cor) in rows.into_iter().zip(crude) {
            let adj = adjusted
                .iter()
                .find(|a| a.feature == row.feature && a.category == row.category);
            out.push(OddsRatioRow {
                total: row.total(),
                prevalence_pct: row.prevalence(),
                is_reference: &row.category == reference,
                crude_or: cor,
                adjusted_or: adj.map(|a| a.odds_ratio),
                ci_low: adj.map(|a| a.ci_low),
                ci_high: adj.map(|a| a.ci_high),
                p_value: adj.map(|a| a.p_value),
                feature: row.feature,
                category: row.category,
                anemic: row.anemic,
                not_anemic: row.not_anemic,
            });
        }
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>, dp: usize) -> String {
    v.map(|x| format!("{x:.dp$}")).unwrap_or_default()
}

pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

/// Columns: feature, category, anemic, not_anemic, total, prevalence_pct,
/// crude_or, adj_or, ci_low, ci_high, p.
pub fn write_factors_csv<W: std::io::Write>(rows: &[OddsRatioRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "feature",
        "category",
        "anemic",
        "not_anemic",
        "total",
        "prevalence_pct",
        "crude_or",
        "adj_or",
        "ci_low",
        "ci_high",
        "p",
    ])?;
    for r in rows {
        w.write_record([
            r.feature.clone(),
            r.category.clone(),
            r.anemic.to_string(),
            r.not_anemic.to_string(),
            r.total.to_string(),
            fmt_opt(r.prevalence_pct, 2),
            fmt_opt(r.crude_or, 2),
            fmt_opt(r.adjusted_or, 3),
            fmt_opt(r.ci_low, 3),
            fmt_opt(r.ci_high, 3),
            r.p_value.map(format_p).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cat: &str, a: usize, b: usize) -> ContingencyRow {
        ContingencyRow {
            feature: "f".into(),
            category: cat.into(),
            anemic: a,
            not_anemic: b,
        }
    }

    #[test]
    fn crude_fixtures() {
        let rows = [row("anemic", 322, 309), row("not", 448, 776)];
        let or = crude_or(&rows, "not", false).unwrap();
        assert!((or[0].unwrap() - 322.0 * 776.0 / (309.0 * 448.0)).abs() < 1e-12);
        assert_eq!(or[1], Some(1.0));
        let same = [row("a", 5, 7), row("b", 5, 7)];
        assert_eq!(crude_or(&same, "b", false).unwrap()[0], Some(1.0));
    }

    #[test]
    fn zero_cells() {
        let rows = [row("a", 0, 7), row("b", 5, 7)];
        assert_eq!(crude_or(&rows, "b", false).unwrap()[0], None);
        let h = crude_or(&rows, "b", true).unwrap()[0].unwrap();
        assert!((h - 0.5 * 7.5 / (7.5 * 5.5)).abs() < 1e-12);
        assert!(crude_or(&[row("a", 1, 1), row("b", 0, 7)], "b", false).is_err());
        assert!(crude_or(&rows, "zzz", false).is_err());
    }

    #[test]
    fn prevalence_and_p_format() {
        assert!((row("yes", 230, 250).prevalence().unwrap() - 47.916_666).abs() < 1e-5);
        assert_eq!(row("none", 0, 0).prevalence(), None);
        assert_eq!(format_p(0.0004), "<0.001");
        assert_eq!(format_p(0.0123), "0.012");
    }
}
