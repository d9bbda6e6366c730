use std::collections::HashMap;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use super::impute::impute_column;
use super::schema::{DatasetSchema, ImputeRule, LabelKind};
use super::thresholds::{derive_nutrition_status, label_from_hemoglobin};
use crate::error::{Error, Result};

/// Categorical table: one level index per (row, feature) plus a binary label
/// (anemic = 1). Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<DatasetSchema>,
    cells: Vec<u32>,
    labels: Vec<u8>,
}

impl Dataset {
    /// Build from level labels; every cell must be one of its feature's levels.
    pub fn from_records(
        schema: Arc<DatasetSchema>,
        rows: &[Vec<String>],
        labels: Vec<u8>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let p = schema.features.len();
        let mut cells = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::SchemaViolation {
                    row: i,
                    feature: "*".into(),
                    detail: format!("expected {p} cells, got {}", row.len()),
                });
            }
            for (spec, v) in schema.features.iter().zip(row) {
                let idx = spec.level_index(v).ok_or_else(|| Error::SchemaViolation {
                    row: i,
                    feature: spec.name.clone(),
                    detail: format!("unknown level `{v}`"),
                })?;
                cells.push(idx as u32);
            }
        }
        Self::from_indices(schema, cells, labels)
    }

    /// Build from level indices laid out row-major.
    pub fn from_indices(
        schema: Arc<DatasetSchema>,
        cells: Vec<u32>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let p = schema.features.len();
        if labels.is_empty() {
            return Err(Error::InvalidInput("dataset has no rows".into()));
        }
        if cells.len() != labels.len() * p {
            return Err(Error::LengthMismatch {
                expected: labels.len() * p,
                got: cells.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::InvalidInput(format!("label at row {i} is not 0/1")));
        }
        for (k, &c) in cells.iter().enumerate() {
            let spec = &schema.features[k % p];
            if c as usize >= spec.levels.len() {
                return Err(Error::SchemaViolation {
                    row: k / p,
                    feature: spec.name.clone(),
                    detail: format!("level index {c} out of range"),
                });
            }
        }
        Ok(Dataset {
            schema,
            cells,
            labels,
        })
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<DatasetSchema> {
        Arc::clone(&self.schema)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.schema.features.len()
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn level(&self, row: usize, feature: usize) -> usize {
        self.cells[row * self.n_features() + feature] as usize
    }

    pub fn level_label(&self, row: usize, feature: usize) -> &str {
        &self.schema.features[feature].levels[self.level(row, feature)]
    }

    pub fn row_levels(&self, row: usize) -> &[u32] {
        let p = self.n_features();
        &self.cells[row * p..(row + 1) * p]
    }

    /// Level indices of one feature, in row order.
    pub fn column(&self, feature: usize) -> Vec<usize> {
        (0..self.n_rows()).map(|i| self.level(i, feature)).collect()
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let p = self.n_features();
        let mut cells = Vec::with_capacity(rows.len() * p);
        for &i in rows {
            cells.extend_from_slice(self.row_levels(i));
        }
        Dataset {
            schema: Arc::clone(&self.schema),
            cells,
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Restrict to the named features (kept in schema order).
    pub fn project(&self, names: &[String]) -> Result<Dataset> {
        let schema = self.schema.project(names)?;
        let keep: Vec<usize> = schema
            .features
            .iter()
            .map(|f| {
                self.schema
                    .feature_index(&f.name)
                    .expect("projected from self")
            })
            .collect();
        let mut cells = Vec::with_capacity(self.n_rows() * keep.len());
        for i in 0..self.n_rows() {
            cells.extend(keep.iter().map(|&j| self.cells[i * self.n_features() + j]));
        }
        Ok(Dataset {
            schema: Arc::new(schema),
            cells,
            labels: self.labels.clone(),
        })
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        [self.labels.len() - pos, pos]
    }

    /// Write the table back out as CSV with level labels.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = self.schema.feature_names();
        header.push(self.schema.label_name.clone());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = (0..self.n_features())
                .map(|j| self.level_label(i, j).to_string())
                .collect();
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    pub rows_read: usize,
    pub dropped_missing_label: usize,
    pub dropped_listwise: usize,
    pub rows_kept: usize,
}

fn parse_binary_label(s: &str) -> Option<u8> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "yes" | "true" | "anemic" => Some(1),
        "0" | "no" | "false" | "not anemic" | "not_anemic" => Some(0),
        _ => None,
    }
}

/// Parse a CSV table against `schema`: drop rows with a missing label, derive
/// the nutrition composite, impute, drop rows still missing a non-imputed
/// feature, then validate every cell.
pub fn read_csv<R: Read>(reader: R, schema: Arc<DatasetSchema>) -> Result<(Dataset, LoadStats)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let pos: HashMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    let col_of = |name: &str| {
        pos.get(name)
            .copied()
            .ok_or_else(|| Error::InvalidSchema(format!("column `{name}` not found in CSV header")))
    };
    let label_col = col_of(&schema.label_name)?;
    let derived = schema.nutrition_status.as_ref();
    let z_cols: Vec<usize> = match derived {
        Some(d) => d
            .z_columns
            .iter()
            .map(|z| col_of(z))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let feature_cols: Vec<Option<usize>> = schema
        .features
        .iter()
        .map(|f| {
            if derived.is_some_and(|d| d.feature == f.name) {
                Ok(None)
            } else {
                col_of(&f.name).map(Some)
            }
        })
        .collect::<Result<_>>()?;

    let mut stats = LoadStats {
        rows_read: 0,
        dropped_missing_label: 0,
        dropped_listwise: 0,
        rows_kept: 0,
    };
    let p = schema.features.len();
    let mut columns: Vec<Vec<Option<String>>> = vec![Vec::new(); p];
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        stats.rows_read += 1;
        let raw_label = rec.get(label_col).unwrap_or("");
        if schema.is_missing(raw_label) {
            stats.dropped_missing_label += 1;
            continue;
        }
        let y = match schema.label_kind {
            LabelKind::Binary => {
                parse_binary_label(raw_label).ok_or_else(|| Error::SchemaViolation {
                    row: line,
                    feature: schema.label_name.clone(),
                    detail: format!("label `{raw_label}` is not binary"),
                })?
            }
            LabelKind::Hemoglobin => {
                let hb: f64 = raw_label
                    .trim()
                    .parse()
                    .map_err(|_| Error::SchemaViolation {
                        row: line,
                        feature: schema.label_name.clone(),
                        detail: format!("hemoglobin `{raw_label}` is not numeric"),
                    })?;
                label_from_hemoglobin(hb, &schema.thresholds).map_err(|e| {
                    Error::SchemaViolation {
                        row: line,
                        feature: schema.label_name.clone(),
                        detail: e.to_string(),
                    }
                })?
            }
        };
        labels.push(y);
        for (j, col) in feature_cols.iter().enumerate() {
            let cell = match col {
                Some(c) => {
                    let v = rec.get(*c).unwrap_or("");
                    (!schema.is_missing(v)).then(|| v.trim().to_string())
                }
                None => {
                    let z: Vec<f64> = z_cols
                        .iter()
                        .map(|&c| {
                            let v = rec.get(c).unwrap_or("");
                            if schema.is_missing(v) {
                                f64::NAN
                            } else {
                                v.trim().parse().unwrap_or(f64::NAN)
                            }
                        })
                        .collect();
                    derive_nutrition_status(&z)
                        .ok()
                        .map(|s| s.label().to_string())
                }
            };
            columns[j].push(cell);
        }
    }

    // listwise deletion for features that are not imputed
    let n = labels.len();
    let keep: Vec<bool> = (0..n)
        .map(|i| {
            schema
                .features
                .iter()
                .zip(&columns)
                .all(|(f, c)| f.impute != ImputeRule::None || c[i].is_some())
        })
        .collect();
    stats.dropped_listwise = keep.iter().filter(|k| !**k).count();
    let labels: Vec<u8> = labels
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(y, _)| *y)
        .collect();
    let mut filled = Vec::with_capacity(p);
    for (spec, col) in schema.features.iter().zip(columns) {
        let kept: Vec<Option<String>> = col
            .into_iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(c, _)| c)
            .collect();
        filled.push(impute_column(&kept, spec)?);
    }
    let rows: Vec<Vec<String>> = (0..labels.len())
        .map(|i| filled.iter().map(|c| c[i].clone()).collect())
        .collect();
    stats.rows_kept = labels.len();
    let ds = Dataset::from_records(schema, &rows, labels)?;
    Ok((ds, stats))
}

pub fn load_csv(
    path: impl AsRef<Path>,
    schema: Arc<DatasetSchema>,
) -> Result<(Dataset, LoadStats)> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_csv(std::io::BufReader::new(f), schema)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = r#"{
        "label_name": "hb",
        "label_kind": "hemoglobin",
        "nutrition_status": {"feature": "nutrition", "z_columns": ["haz", "whz"]},
        "features": [
            {"name": "fever", "kind": "binary", "levels": ["no", "yes"], "reference_level": "no", "impute": "mode"},
            {"name": "anc", "kind": "ordinal", "levels": ["0","1","2","3","4","5","6","7","8","9","10"],
             "reference_level": "0", "impute": "median", "cap": 10},
            {"name": "nutrition", "kind": "binary", "levels": ["nourished", "malnourished"],
             "reference_level": "nourished", "impute": "none"}
        ]
    }"#;

    #[test]
    fn loads_imputes_and_derives() {
        let schema = Arc::new(DatasetSchema::from_json_str(SCHEMA).unwrap());
        let csv = "fever,anc,haz,whz,hb\n\
                   yes,2,0.1,0.2,10.5\n\
                   yes,15,-2.5,0.0,11.0\n\
                   no,NA,1,1,12\n\
                   NA,4,.,.,9\n\
                   no,3,0,0,NA\n";
        let (ds, stats) = read_csv(csv.as_bytes(), schema).unwrap();
        assert_eq!(stats.rows_read, 5);
        assert_eq!(stats.dropped_missing_label, 1);
        // row 4 has no anthropometry and nutrition is not imputed
        assert_eq!(stats.dropped_listwise, 1);
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.labels(), &[1, 0, 0]);
        assert_eq!(ds.level_label(1, 1), "10");
        assert_eq!(ds.level_label(2, 1), "2");
        assert_eq!(ds.level_label(1, 2), "malnourished");
        assert_eq!(ds.level_label(0, 2), "nourished");
    }

    #[test]
    fn unknown_level_names_row_and_feature() {
        let schema = Arc::new(DatasetSchema::from_json_str(SCHEMA).unwrap());
        let err = Dataset::from_records(
            schema,
            &[vec!["maybe".into(), "1".into(), "nourished".into()]],
            vec![1],
        )
        .unwrap_err();
        match err {
            Error::SchemaViolation { row, feature, .. } => {
                assert_eq!(row, 0);
                assert_eq!(feature, "fever");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
