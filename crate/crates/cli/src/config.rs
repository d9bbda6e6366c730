use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tabrisk::balance::SmoteConfig;
use tabrisk::learners::{Grid, LearnerId, ParamValue};
use tabrisk::select::{BorutaConfig, SelectionConfig};

use crate::PipelineError;

fn default_test_frac() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoteSection {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_k")]
    pub k_neighbors: usize,
    #[serde(default = "default_ratio")]
    pub target_ratio: f64,
}

fn default_true() -> bool {
    true
}
fn default_k() -> usize {
    5
}
fn default_ratio() -> f64 {
    1.0
}

impl Default for SmoteSection {
    fn default() -> Self {
        SmoteSection {
            enabled: true,
            k_neighbors: 5,
            target_ratio: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionSection {
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_min_methods")]
    pub min_methods: usize,
    #[serde(default)]
    pub forced_includes: Vec<String>,
    #[serde(default)]
    pub boruta: BorutaSection,
}

fn default_top_k() -> usize {
    15
}
fn default_min_methods() -> usize {
    3
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            top_k: 15,
            min_methods: 3,
            forced_includes: Vec::new(),
            boruta: BorutaSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BorutaSection {
    #[serde(default = "default_iters")]
    pub max_iterations: usize,
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "default_sig")]
    pub significance: f64,
}

fn default_iters() -> usize {
    100
}
fn default_trees() -> usize {
    100
}
fn default_sig() -> f64 {
    0.05
}

impl Default for BorutaSection {
    fn default() -> Self {
        BorutaSection {
            max_iterations: 100,
            n_trees: 100,
            significance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSection {
    #[serde(default = "default_folds")]
    pub n_folds: usize,
    #[serde(default = "default_repeats")]
    pub n_repeats: usize,
}

fn default_folds() -> usize {
    5
}
fn default_repeats() -> usize {
    3
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            n_folds: 5,
            n_repeats: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpiSection {
    #[serde(default = "default_true")]
    pub enabled: bool,
    /// Reference level overrides by feature.
    #[serde(default)]
    pub references: BTreeMap<String, String>,
    #[serde(default)]
    pub haldane: bool,
}

impl Default for EpiSection {
    fn default() -> Self {
        EpiSection {
            enabled: true,
            references: BTreeMap::new(),
            haldane: false,
        }
    }
}

/// A model entry: either a bare id or an id with per-dimension grid
/// overrides. Overridden dimensions replace the default values; new keys
/// are appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelEntry {
    Id(String),
    WithGrid {
        id: String,
        #[serde(default)]
        grid: BTreeMap<String, Vec<ParamValue>>,
    },
}

impl ModelEntry {
    pub fn id(&self) -> &str {
        match self {
            ModelEntry::Id(id) | ModelEntry::WithGrid { id, .. } => id,
        }
    }

    pub fn learner(&self) -> Result<LearnerId, PipelineError> {
        self.id()
            .parse()
            .map_err(|e| PipelineError::Config(format!("{e}")))
    }

    pub fn grid(&self, n_features: usize) -> Result<Grid, PipelineError> {
        let learner = self.learner()?;
        let mut grid = learner.default_grid(n_features);
        if let ModelEntry::WithGrid {
            grid: overrides, ..
        } = self
        {
            for (key, values) in overrides {
                if !learner.allowed_keys().contains(&key.as_str()) {
                    return Err(PipelineError::Config(format!(
                        "{learner}: unknown hyperparameter `{key}`"
                    )));
                }
                if values.is_empty() {
                    return Err(PipelineError::Config(format!(
                        "{learner}: grid for `{key}` is empty"
                    )));
                }
                match grid.0.iter_mut().find(|(k, _)| k == key) {
                    Some(dim) => dim.1 = values.clone(),
                    None => grid.0.push((key.clone(), values.clone())),
                }
            }
        }
        Ok(grid)
    }
}

fn all_models() -> Vec<ModelEntry> {
    LearnerId::ALL
        .iter()
        .map(|l| ModelEntry::Id(l.id().to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub data_path: PathBuf,
    pub schema_path: PathBuf,
    pub seed: u64,
    #[serde(default = "default_test_frac")]
    pub test_frac: f64,
    #[serde(default)]
    pub smote: SmoteSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub cv: CvSection,
    #[serde(default = "all_models")]
    pub models: Vec<ModelEntry>,
    #[serde(default)]
    pub epi: EpiSection,
    pub output_dir: PathBuf,
}

/// Environment variable that replaces `output_dir` when set.
pub const OUTPUT_DIR_ENV: &str = "TABRISK_OUTPUT_DIR";

impl PipelineConfig {
    /// Parse a config file; relative paths resolve against its directory.
    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            cfg.output_dir = PathBuf::from(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.data_path,
            &mut self.schema_path,
            &mut self.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.test_frac > 0.0 && self.test_frac < 1.0) {
            return bad(format!(
                "test_frac must lie in (0, 1), got {}",
                self.test_frac
            ));
        }
        if self.models.is_empty() {
            return bad("no models selected".into());
        }
        let mut seen = Vec::new();
        for m in &self.models {
            let l = m.learner()?;
            if seen.contains(&l) {
                return bad(format!("model `{l}` listed twice"));
            }
            seen.push(l);
        }
        for (label, p) in [
            ("data_path", &self.data_path),
            ("schema_path", &self.schema_path),
        ] {
            if !p.is_file() {
                return bad(format!("{label} `{}` does not exist", p.display()));
            }
        }
        self.smote_config(0)
            .validate()
            .map_err(PipelineError::from_core("config"))?;
        self.selection_config(0)
            .boruta
            .validate()
            .map_err(PipelineError::from_core("config"))?;
        Ok(())
    }

    pub fn learners(&self) -> Result<Vec<LearnerId>, PipelineError> {
        self.models.iter().map(ModelEntry::learner).collect()
    }

    pub fn smote_config(&self, seed: u64) -> SmoteConfig {
        SmoteConfig {
            k_neighbors: self.smote.k_neighbors,
            target_ratio: self.smote.target_ratio,
            seed,
        }
    }

    pub fn selection_config(&self, seed: u64) -> SelectionConfig {
        SelectionConfig {
            top_k: self.selection.top_k,
            min_methods: self.selection.min_methods,
            boruta: BorutaConfig {
                max_iterations: self.selection.boruta.max_iterations,
                n_trees: self.selection.boruta.n_trees,
                significance: self.selection.boruta.significance,
                seed,
            },
            forced_includes: self.selection.forced_includes.clone(),
        }
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
