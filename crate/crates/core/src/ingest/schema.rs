use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::thresholds::AnemiaThresholds;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Ordinal,
    OneHot,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeRule {
    #[default]
    None,
    Median,
    Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub levels: Vec<String>,
    pub reference_level: String,
    #[serde(default)]
    pub impute: ImputeRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::InvalidSchema(format!(
                "feature `{}`: {msg}",
                self.name
            )))
        };
        if self.levels.is_empty() {
            return bad("levels must be non-empty".into());
        }
        let unique: HashSet<&str> = self.levels.iter().map(String::as_str).collect();
        if unique.len() != self.levels.len() {
            return bad("levels must be unique".into());
        }
        if !unique.contains(self.reference_level.as_str()) {
            return bad(format!(
                "reference level `{}` is not among the levels",
                self.reference_level
            ));
        }
        if self.kind == FeatureKind::Binary && self.levels.len() != 2 {
            return bad(format!(
                "binary features need exactly 2 levels, got {}",
                self.levels.len()
            ));
        }
        if let Some(c) = self.cap {
            if !c.is_finite() {
                return bad("cap must be finite".into());
            }
        }
        Ok(())
    }

    pub fn level_index(&self, value: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == value)
    }

    pub fn reference_index(&self) -> usize {
        self.level_index(&self.reference_level)
            .expect("validated schema has its reference level")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    /// 0/1 (also yes/no, true/false).
    #[default]
    Binary,
    /// Hemoglobin in g/dL, dichotomised with [`AnemiaThresholds`].
    Hemoglobin,
}

/// Derives a nourished/malnourished feature from anthropometric z-score
/// columns of the input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NutritionDerivation {
    pub feature: String,
    pub z_columns: Vec<String>,
}

fn default_missing_tokens() -> Vec<String> {
    vec![String::new(), "NA".to_string(), ".".to_string()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub features: Vec<FeatureSpec>,
    pub label_name: String,
    #[serde(default)]
    pub label_kind: LabelKind,
    #[serde(default)]
    pub thresholds: AnemiaThresholds,
    #[serde(default = "default_missing_tokens")]
    pub missing_tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nutrition_status: Option<NutritionDerivation>,
    /// Features kept by consensus selection regardless of their vote count.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forced_includes: Vec<String>,
}

impl DatasetSchema {
    pub fn new(features: Vec<FeatureSpec>, label_name: impl Into<String>) -> Result<Self> {
        let s = DatasetSchema {
            features,
            label_name: label_name.into(),
            label_kind: LabelKind::Binary,
            thresholds: AnemiaThresholds::default(),
            missing_tokens: default_missing_tokens(),
            nutrition_status: None,
            forced_includes: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::InvalidSchema("schema lists no features".into()));
        }
        let mut names = HashSet::new();
        for f in &self.features {
            f.validate()?;
            if !names.insert(f.name.as_str()) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate feature `{}`",
                    f.name
                )));
            }
        }
        if names.contains(self.label_name.as_str()) {
            return Err(Error::InvalidSchema(format!(
                "label `{}` is also listed as a feature",
                self.label_name
            )));
        }
        if let Some(n) = &self.nutrition_status {
            let spec = self.feature(&n.feature).ok_or_else(|| {
                Error::InvalidSchema(format!("derived feature `{}` is not declared", n.feature))
            })?;
            for lvl in ["nourished", "malnourished"] {
                if spec.level_index(lvl).is_none() {
                    return Err(Error::InvalidSchema(format!(
                        "derived feature `{}` must have level `{lvl}`",
                        n.feature
                    )));
                }
            }
            if n.z_columns.is_empty() {
                return Err(Error::InvalidSchema(
                    "nutrition derivation needs z-score columns".into(),
                ));
            }
        }
        if let Some(f) = self
            .forced_includes
            .iter()
            .find(|f| !names.contains(f.as_str()))
        {
            return Err(Error::InvalidSchema(format!(
                "forced include `{f}` is not a feature"
            )));
        }
        if self.label_kind == LabelKind::Hemoglobin {
            self.thresholds.validate()?;
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let schema: DatasetSchema = serde_json::from_str(s)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn is_missing(&self, cell: &str) -> bool {
        let t = cell.trim();
        self.missing_tokens.iter().any(|m| m == t)
    }

    /// Schema restricted to `names`, kept in schema order.
    pub fn project(&self, names: &[String]) -> Result<DatasetSchema> {
        for n in names {
            if self.feature(n).is_none() {
                return Err(Error::InvalidSchema(format!("unknown feature `{n}`")));
            }
        }
        let mut s = self.clone();
        s.features.retain(|f| names.contains(&f.name));
        if let Some(n) = &s.nutrition_status {
            if !names.contains(&n.feature) {
                s.nutrition_status = None;
            }
        }
        s.forced_includes.retain(|f| names.contains(f));
        s.validate()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn rejects_bad_specs() {
        assert!(spec("a", FeatureKind::Binary, &["no", "yes", "dk"], "no")
            .validate()
            .is_err());
        assert!(spec("a", FeatureKind::OneHot, &["x", "x"], "x")
            .validate()
            .is_err());
        assert!(spec("a", FeatureKind::OneHot, &["x", "y"], "z")
            .validate()
            .is_err());
        assert!(spec("a", FeatureKind::Ordinal, &[], "z")
            .validate()
            .is_err());
        assert!(spec("a", FeatureKind::Binary, &["no", "yes"], "no")
            .validate()
            .is_ok());
    }

    #[test]
    fn rejects_label_as_feature_and_duplicates() {
        let a = spec("a", FeatureKind::Binary, &["no", "yes"], "no");
        assert!(DatasetSchema::new(vec![a.clone()], "a").is_err());
        assert!(DatasetSchema::new(vec![a.clone(), a.clone()], "y").is_err());
        assert!(DatasetSchema::new(vec![a], "y").is_ok());
    }

    #[test]
    fn parses_json_with_defaults() {
        let s = DatasetSchema::from_json_str(
            r#"{"label_name":"anemic","features":[
                {"name":"anc_visits","kind":"ordinal","levels":["0","1","2"],
                 "reference_level":"0","impute":"median","cap":2}]}"#,
        )
        .unwrap();
        assert_eq!(s.features[0].impute, ImputeRule::Median);
        assert_eq!(s.features[0].cap, Some(2.0));
        assert!(s.is_missing("NA") && s.is_missing("") && s.is_missing("."));
        assert!(!s.is_missing("0"));
    }
}
