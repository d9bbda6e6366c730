//! Synthetic categorical survey data with a known logistic truth, used to
//! check the pipeline where real microdata cannot be shipped.

use std::path::Path;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{encode, Dataset, DatasetSchema, FeatureKind, FeatureSpec, ImputeRule};
use crate::matrix::sigmoid;
use crate::rng::rng_from_seed;

/// One generated feature. Ordinal features contribute `slope · rank` to the
/// log-odds; binary and one-hot features contribute `effects[level]`, with
/// the reference level's effect fixed at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGenerator {
    pub name: String,
    pub kind: FeatureKind,
    pub levels: Vec<String>,
    pub reference_level: String,
    pub probabilities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effects: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub intercept: f64,
    #[serde(default = "default_label")]
    pub label_name: String,
    pub features: Vec<FeatureGenerator>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forced_includes: Vec<String>,
}

fn default_label() -> String {
    "anemia".to_string()
}

/// True coefficient per encoded column, in the order produced by
/// [`crate::ingest::encode`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub intercept: f64,
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// Generating probability of class 1 per row.
    pub true_probability: Vec<f64>,
    pub truth: GroundTruth,
}

impl FeatureGenerator {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::InvalidConfig(format!(
                "generator feature `{}`: {msg}",
                self.name
            )))
        };
        if self.probabilities.len() != self.levels.len() {
            return bad(format!(
                "{} probabilities for {} levels",
                self.probabilities.len(),
                self.levels.len()
            ));
        }
        if self
            .probabilities
            .iter()
            .any(|p| !(p.is_finite() && *p >= 0.0))
        {
            return bad("probabilities must be finite and non-negative".into());
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("probabilities sum to {total}, not 1"));
        }
        match self.kind {
            FeatureKind::Ordinal => {
                if self.effects.is_some() {
                    return bad("ordinal features take a slope, not per-level effects".into());
                }
            }
            _ => {
                if self.slope.is_some() {
                    return bad("only ordinal features take a slope".into());
                }
                if let Some(e) = &self.effects {
                    if e.len() != self.levels.len() {
                        return bad(format!(
                            "{} effects for {} levels",
                            e.len(),
                            self.levels.len()
                        ));
                    }
                    let r = self.levels.iter().position(|l| *l == self.reference_level);
                    if r.is_some_and(|r| e[r] != 0.0) {
                        return bad("reference level effect must be 0".into());
                    }
                }
            }
        }
        Ok(())
    }

    fn spec(&self) -> FeatureSpec {
        FeatureSpec {
            name: self.name.clone(),
            kind: self.kind,
            levels: self.levels.clone(),
            reference_level: self.reference_level.clone(),
            impute: ImputeRule::None,
            cap: None,
        }
    }

    fn contribution(&self, level: usize) -> f64 {
        match self.kind {
            FeatureKind::Ordinal => self.slope.unwrap_or(0.0) * level as f64,
            _ => self.effects.as_ref().map_or(0.0, |e| e[level]),
        }
    }
}

impl GeneratorSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: GeneratorSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("generator n must be >= 1".into()));
        }
        if !self.intercept.is_finite() {
            return Err(Error::InvalidConfig(
                "generator intercept must be finite".into(),
            ));
        }
        for f in &self.features {
            f.validate()?;
        }
        self.schema().map(|_| ())
    }

    pub fn schema(&self) -> Result<DatasetSchema> {
        let mut s = DatasetSchema::new(
            self.features.iter().map(FeatureGenerator::spec).collect(),
            &self.label_name,
        )?;
        s.forced_includes = self.forced_includes.clone();
        s.validate()?;
        Ok(s)
    }

    /// Log-odds of class 1 for a row of level indices.
    pub fn log_odds(&self, levels: &[usize]) -> f64 {
        self.intercept
            + self
                .features
                .iter()
                .zip(levels)
                .map(|(f, &l)| f.contribution(l))
                .sum::<f64>()
    }

    pub fn generate(&self, seed: u64) -> Result<SyntheticData> {
        self.validate()?;
        let schema = Arc::new(self.schema()?);
        let mut rng = rng_from_seed(seed);
        let samplers: Vec<WeightedIndex<f64>> = self
            .features
            .iter()
            .map(|f| {
                WeightedIndex::new(&f.probabilities)
                    .map_err(|e| Error::InvalidConfig(format!("`{}`: {e}", f.name)))
            })
            .collect::<Result<_>>()?;
        let p = self.features.len();
        let mut cells = Vec::with_capacity(self.n * p);
        let mut labels = Vec::with_capacity(self.n);
        let mut probs = Vec::with_capacity(self.n);
        let mut row = vec![0usize; p];
        for _ in 0..self.n {
            for (slot, s) in row.iter_mut().zip(&samplers) {
                *slot = s.sample(&mut rng);
            }
            let pr = sigmoid(self.log_odds(&row));
            let u: f64 = rng.random();
            labels.push(u8::from(u < pr));
            probs.push(pr);
            cells.extend(row.iter().map(|&l| l as u32));
        }
        let dataset = Dataset::from_indices(schema, cells, labels)?;
        let truth = self.truth(&dataset)?;
        Ok(SyntheticData {
            dataset,
            true_probability: probs,
            truth,
        })
    }

    fn truth(&self, ds: &Dataset) -> Result<GroundTruth> {
        let enc = encode(ds)?;
        let coefficients = enc
            .column_map
            .iter()
            .map(|c| {
                let f = &self.features[c.feature_index];
                match &c.level {
                    None => f.slope.unwrap_or(0.0),
                    Some(l) => {
                        let li = f.levels.iter().position(|x| x == l).unwrap_or(0);
                        f.effects.as_ref().map_or(0.0, |e| e[li])
                    }
                }
            })
            .collect();
        Ok(GroundTruth {
            intercept: self.intercept,
            columns: enc.column_names(),
            coefficients,
        })
    }
}

/// Write `data.csv`, `schema.json` and `truth.json` into `dir`.
pub fn write_synthetic(data: &SyntheticData, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let f = std::fs::File::create(dir.join("data.csv"))?;
    data.dataset.write_csv(std::io::BufWriter::new(f))?;
    let schema = serde_json::to_string_pretty(data.dataset.schema())?;
    std::fs::write(dir.join("schema.json"), schema + "\n")?;
    let truth = serde_json::to_string_pretty(&data.truth)?;
    std::fs::write(dir.join("truth.json"), truth + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, intercept: f64, effect: f64) -> GeneratorSpec {
        GeneratorSpec {
            n,
            intercept,
            label_name: "y".into(),
            features: vec![
                FeatureGenerator {
                    name: "a".into(),
                    kind: FeatureKind::Binary,
                    levels: vec!["no".into(), "yes".into()],
                    reference_level: "no".into(),
                    probabilities: vec![0.5, 0.5],
                    effects: Some(vec![0.0, effect]),
                    slope: None,
                },
                FeatureGenerator {
                    name: "b".into(),
                    kind: FeatureKind::Ordinal,
                    levels: vec!["low".into(), "mid".into(), "high".into()],
                    reference_level: "low".into(),
                    probabilities: vec![0.3, 0.4, 0.3],
                    effects: None,
                    slope: Some(0.0),
                },
            ],
            forced_includes: Vec::new(),
        }
    }

    #[test]
    fn null_model_prevalence_matches_base_rate() {
        let s = spec(4000, -0.5, 0.0);
        let d = s.generate(3).unwrap();
        let p = sigmoid(-0.5);
        let rate = d.dataset.class_counts()[1] as f64 / 4000.0;
        let sd = (p * (1.0 - p) / 4000.0).sqrt();
        assert!((rate - p).abs() <= 2.0 * sd, "rate {rate} vs {p}");
    }

    #[test]
    fn fixed_seed_fixed_data() {
        let s = spec(300, 0.0, 1.0);
        let a = s.generate(11).unwrap();
        let b = s.generate(11).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.true_probability, b.true_probability);
        assert_eq!(a.truth.coefficients, vec![1.0, 0.0]);
    }

    #[test]
    fn bad_probabilities_rejected() {
        let mut s = spec(10, 0.0, 1.0);
        s.features[0].probabilities = vec![0.7, 0.7];
        assert!(s.validate().is_err());
        let mut s = spec(10, 0.0, 1.0);
        s.features[0].effects = Some(vec![0.3, 1.0]);
        assert!(s.validate().is_err());
    }
}
