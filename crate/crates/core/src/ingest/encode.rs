use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::schema::{DatasetSchema, FeatureKind};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Provenance of one encoded column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedColumn {
    pub feature: String,
    pub feature_index: usize,
    pub kind: FeatureKind,
    /// Indicated level for binary / one-hot columns; `None` for ordinal ranks.
    pub level: Option<String>,
}

impl EncodedColumn {
    pub fn name(&self) -> String {
        match &self.level {
            Some(l) => format!("{}={}", self.feature, l),
            None => self.feature.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub values: Matrix,
    pub column_map: Vec<EncodedColumn>,
}

/// How each feature is turned into numeric columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingMode {
    /// Ordinal → rank, binary → 0/1, one-hot → indicators without the reference.
    Schema,
    /// Every feature → indicators for each non-reference level (treatment coding).
    Treatment,
}

fn plan_columns(
    schema: &DatasetSchema,
    mode: EncodingMode,
    references: &BTreeMap<String, String>,
) -> Result<Vec<(EncodedColumn, Option<usize>)>> {
    let mut cols = Vec::new();
    for (fi, f) in schema.features.iter().enumerate() {
        let reference = match references.get(&f.name) {
            Some(r) => f.level_index(r).ok_or_else(|| {
                Error::InvalidSchema(format!("reference `{r}` is not a level of `{}`", f.name))
            })?,
            None => f.reference_index(),
        };
        let kind = if mode == EncodingMode::Treatment && f.kind == FeatureKind::Ordinal {
            FeatureKind::OneHot
        } else {
            f.kind
        };
        match kind {
            FeatureKind::Ordinal => cols.push((
                EncodedColumn {
                    feature: f.name.clone(),
                    feature_index: fi,
                    kind: f.kind,
                    level: None,
                },
                None,
            )),
            FeatureKind::Binary | FeatureKind::OneHot => {
                for (li, l) in f.levels.iter().enumerate() {
                    if li == reference {
                        continue;
                    }
                    cols.push((
                        EncodedColumn {
                            feature: f.name.clone(),
                            feature_index: fi,
                            kind,
                            level: Some(l.clone()),
                        },
                        Some(li),
                    ));
                }
            }
        }
    }
    Ok(cols)
}

fn encode_impl(
    ds: &Dataset,
    mode: EncodingMode,
    references: &BTreeMap<String, String>,
) -> Result<EncodedMatrix> {
    let plan = plan_columns(ds.schema(), mode, references)?;
    let n = ds.n_rows();
    let mut values = Matrix::zeros(n, plan.len());
    for i in 0..n {
        let row = values.row_mut(i);
        for (j, (col, level)) in plan.iter().enumerate() {
            let v = ds.level(i, col.feature_index);
            row[j] = match level {
                None => v as f64,
                Some(li) => f64::from(u8::from(v == *li)),
            };
        }
    }
    Ok(EncodedMatrix {
        values,
        column_map: plan.into_iter().map(|(c, _)| c).collect(),
    })
}

/// Schema-driven encoding used by the predictive pipeline.
pub fn encode(ds: &Dataset) -> Result<EncodedMatrix> {
    encode_impl(ds, EncodingMode::Schema, &BTreeMap::new())
}

/// Reference-dropped indicator coding for every feature, with optional
/// per-feature reference overrides. Used for odds-ratio models.
pub fn encode_treatment(
    ds: &Dataset,
    references: &BTreeMap<String, String>,
) -> Result<EncodedMatrix> {
    encode_impl(ds, EncodingMode::Treatment, references)
}

impl EncodedMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.column_map.iter().map(EncodedColumn::name).collect()
    }

    /// Encoded column indices grouped by source feature name.
    pub fn columns_by_feature(&self) -> BTreeMap<String, Vec<usize>> {
        let mut out: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (j, c) in self.column_map.iter().enumerate() {
            out.entry(c.feature.clone()).or_default().push(j);
        }
        out
    }

    /// Recover category labels of one encoded row.
    pub fn decode_row(&self, row: &[f64], schema: &DatasetSchema) -> Result<Vec<String>> {
        let mut out: Vec<Option<String>> = vec![None; schema.features.len()];
        for (c, &v) in self.column_map.iter().zip(row) {
            let spec = &schema.features[c.feature_index];
            match &c.level {
                None => {
                    let r = v.round();
                    if (v - r).abs() > 1e-9 || r < 0.0 || r as usize >= spec.levels.len() {
                        return Err(Error::SchemaViolation {
                            row: 0,
                            feature: spec.name.clone(),
                            detail: format!("rank {v} does not decode"),
                        });
                    }
                    out[c.feature_index] = Some(spec.levels[r as usize].clone());
                }
                Some(level) => {
                    if v == 1.0 {
                        if out[c.feature_index].is_some() {
                            return Err(Error::SchemaViolation {
                                row: 0,
                                feature: spec.name.clone(),
                                detail: "more than one indicator set".into(),
                            });
                        }
                        out[c.feature_index] = Some(level.clone());
                    }
                }
            }
        }
        // features with no indicator set take their reference level
        Ok(out
            .into_iter()
            .zip(&schema.features)
            .map(|(v, spec)| v.unwrap_or_else(|| spec.reference_level.clone()))
            .collect())
    }

    /// Canonical CSV dump: one column per encoded column, in plan order.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.column_names())?;
        for r in self.values.rows_iter() {
            w.write_record(r.iter().map(|v| format!("{v}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::schema::{FeatureSpec, ImputeRule};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn spec(name: &str, kind: FeatureKind, levels: &[&str], r: &str) -> FeatureSpec {
        FeatureSpec {
            name: name.into(),
            kind,
            levels: levels.iter().map(|s| s.to_string()).collect(),
            reference_level: r.into(),
            impute: ImputeRule::None,
            cap: None,
        }
    }

    fn schema() -> Arc<DatasetSchema> {
        Arc::new(
            DatasetSchema::new(
                vec![
                    spec("fever", FeatureKind::Binary, &["no", "yes"], "no"),
                    spec(
                        "province",
                        FeatureKind::OneHot,
                        &[
                            "koshi",
                            "madhesh",
                            "bagmati",
                            "gandaki",
                            "lumbini",
                            "karnali",
                            "sudurpashchim",
                        ],
                        "madhesh",
                    ),
                    spec(
                        "age",
                        FeatureKind::Ordinal,
                        &["6-12", "13-24", "25-36", "37-48", "49-59"],
                        "6-12",
                    ),
                ],
                "anemic",
            )
            .unwrap(),
        )
    }

    fn row(f: &str, p: &str, a: &str) -> Vec<String> {
        vec![f.into(), p.into(), a.into()]
    }

    #[test]
    fn encodes_by_kind() {
        let ds = Dataset::from_records(
            schema(),
            &[row("yes", "madhesh", "25-36"), row("no", "karnali", "6-12")],
            vec![1, 0],
        )
        .unwrap();
        let enc = encode(&ds).unwrap();
        assert_eq!(enc.n_cols(), 1 + 6 + 1);
        assert_eq!(enc.values.get(0, 0), 1.0);
        assert_eq!(enc.values.get(0, 7), 2.0);
        // reference province encodes as all-zero indicators
        assert!(enc.values.row(0)[1..7].iter().all(|&v| v == 0.0));
        let karnali = enc
            .column_names()
            .iter()
            .position(|c| c == "province=karnali")
            .unwrap();
        assert_eq!(enc.values.get(1, karnali), 1.0);
    }

    #[test]
    fn treatment_coding_expands_ordinals() {
        let ds =
            Dataset::from_records(schema(), &[row("yes", "madhesh", "25-36")], vec![1]).unwrap();
        let mut refs = BTreeMap::new();
        refs.insert("fever".to_string(), "yes".to_string());
        let enc = encode_treatment(&ds, &refs).unwrap();
        assert_eq!(enc.n_cols(), 1 + 6 + 4);
        assert_eq!(enc.column_names()[0], "fever=no");
        let age = enc
            .column_names()
            .iter()
            .position(|c| c == "age=25-36")
            .unwrap();
        assert_eq!(enc.values.get(0, age), 1.0);
    }

    proptest! {
        #[test]
        fn round_trip_and_one_hot_partition(rows in proptest::collection::vec((0usize..2, 0usize..7, 0usize..5), 1..30)) {
            let s = schema();
            let recs: Vec<Vec<String>> = rows.iter().map(|&(f, p, a)| vec![
                s.features[0].levels[f].clone(), s.features[1].levels[p].clone(), s.features[2].levels[a].clone(),
            ]).collect();
            let ds = Dataset::from_records(Arc::clone(&s), &recs, vec![0; recs.len()]).unwrap();
            let enc = encode(&ds).unwrap();
            for (i, rec) in recs.iter().enumerate() {
                let r = enc.values.row(i);
                let ones: f64 = r[1..7].iter().sum();
                prop_assert!(ones == 0.0 || ones == 1.0);
                prop_assert_eq!(ones == 0.0, rec[1] == "madhesh");
                prop_assert_eq!(&enc.decode_row(r, &s).unwrap(), rec);
            }
        }
    }
}
