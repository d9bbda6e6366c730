//! The nine classifiers behind one [`Classifier`] interface, plus the
//! hyperparameter plumbing that maps grid points onto concrete fits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub mod forest;
pub mod gbt;
pub mod hyper;
pub mod knn;
pub mod lda;
pub mod logistic;
pub mod mlp;
pub mod nb;
pub mod svm;
pub mod tree;

pub use forest::{ForestModel, ForestParams};
pub use gbt::{GbtModel, GbtParams};
pub use hyper::{Grid, HyperParams, ParamValue};
pub use knn::KnnModel;
pub use lda::LdaModel;
pub use logistic::{irls, irls_named, IrlsFit, LogisticModel};
pub use mlp::{MlpModel, MlpParams};
pub use nb::NbModel;
pub use svm::{Kernel, SvmModel};
pub use tree::{TreeModel, TreeParams};

/// Version tag written into serialized model documents.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A fitted binary classifier. Fitted models are immutable.
pub trait Classifier: Send + Sync + fmt::Debug {
    fn learner(&self) -> LearnerId;

    /// Probability of class 1 for every row of `x`.
    fn predict_proba(&self, x: &Matrix) -> Vec<f64>;

    fn predict(&self, x: &Matrix) -> Vec<u8> {
        self.predict_proba(x)
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect()
    }

    /// Learned parameters as plain JSON.
    fn parameters(&self) -> serde_json::Value;
}

/// Shared preconditions: matching lengths, finite inputs, both classes.
pub fn check_training_data(x: &Matrix, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if !x.all_finite() {
        return Err(Error::InvalidInput(
            "training matrix has non-finite values".into(),
        ));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::InvalidInput(format!("label {bad} is not binary")));
    }
    let ones = y.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::InvalidInput(
            "training labels contain a single class".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerId {
    Lr,
    Knn,
    Dt,
    Rf,
    Xgb,
    Svm,
    Nb,
    Lda,
    Dnn,
}

impl LearnerId {
    pub const ALL: [LearnerId; 9] = [
        LearnerId::Lr,
        LearnerId::Knn,
        LearnerId::Dt,
        LearnerId::Rf,
        LearnerId::Xgb,
        LearnerId::Svm,
        LearnerId::Nb,
        LearnerId::Lda,
        LearnerId::Dnn,
    ];

    /// Short lowercase id used in file names and configs.
    pub fn id(self) -> &'static str {
        match self {
            LearnerId::Lr => "lr",
            LearnerId::Knn => "knn",
            LearnerId::Dt => "dt",
            LearnerId::Rf => "rf",
            LearnerId::Xgb => "xgb",
            LearnerId::Svm => "svm",
            LearnerId::Nb => "nb",
            LearnerId::Lda => "lda",
            LearnerId::Dnn => "dnn",
        }
    }

    /// Column header used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            LearnerId::Lr => "LR",
            LearnerId::Knn => "KNN",
            LearnerId::Dt => "DT",
            LearnerId::Rf => "RF",
            LearnerId::Xgb => "XGB",
            LearnerId::Svm => "SVM",
            LearnerId::Nb => "NB",
            LearnerId::Lda => "LDA",
            LearnerId::Dnn => "DNN",
        }
    }

    pub fn allowed_keys(self) -> &'static [&'static str] {
        match self {
            LearnerId::Lr => &["l2"],
            LearnerId::Knn => &["k"],
            LearnerId::Dt => &["max_depth", "min_samples_leaf"],
            LearnerId::Rf => &[
                "n_trees",
                "max_depth",
                "min_samples_leaf",
                "m_features",
                "bootstrap",
            ],
            LearnerId::Xgb => &[
                "n_rounds",
                "eta",
                "max_depth",
                "lambda",
                "gamma",
                "min_child_weight",
                "base_score",
            ],
            LearnerId::Svm => &["C", "kernel", "gamma"],
            LearnerId::Nb => &["alpha"],
            LearnerId::Lda => &["eps"],
            LearnerId::Dnn => &["hidden_sizes", "lr", "epochs", "batch", "seed"],
        }
    }

    /// Built-in search grid. `n_features` fixes the RBF width at 1/d.
    pub fn default_grid(self, n_features: usize) -> Grid {
        let nums = |v: &[f64]| v.iter().map(|&x| ParamValue::Num(x)).collect::<Vec<_>>();
        match self {
            LearnerId::Lr => Grid::default().dim("l2", nums(&[0.01, 0.1, 1.0, 10.0])),
            LearnerId::Knn => Grid::default().dim("k", nums(&[5.0, 11.0, 21.0])),
            LearnerId::Dt => {
                let mut depths = nums(&[3.0, 5.0, 8.0]);
                depths.push(ParamValue::Null);
                Grid::default().dim("max_depth", depths)
            }
            LearnerId::Rf => Grid::default().dim("n_trees", nums(&[100.0, 300.0])),
            LearnerId::Xgb => Grid::default()
                .dim("n_rounds", nums(&[100.0, 300.0]))
                .dim("eta", nums(&[0.05, 0.1, 0.3]))
                .dim("max_depth", nums(&[3.0, 5.0])),
            LearnerId::Svm => Grid::default()
                .dim("C", nums(&[0.1, 1.0, 10.0]))
                .dim("kernel", vec!["linear".into(), "rbf".into()])
                .dim("gamma", nums(&[1.0 / n_features.max(1) as f64])),
            LearnerId::Nb => Grid::default().dim("alpha", nums(&[0.5, 1.0])),
            LearnerId::Lda => Grid::default().dim("eps", nums(&[1e-4, 1e-2])),
            LearnerId::Dnn => Grid::default()
                .dim(
                    "hidden_sizes",
                    vec![
                        ParamValue::List(vec![32.0]),
                        ParamValue::List(vec![64.0, 32.0]),
                    ],
                )
                .dim("lr", nums(&[1e-2, 1e-3]))
                .dim("epochs", nums(&[200.0])),
        }
    }

    /// Fit this learner. `seed` drives every random choice (bootstrap,
    /// feature subsets, weight init, shuffling) unless `hp` pins one.
    pub fn fit(
        self,
        x: &Matrix,
        y: &[u8],
        hp: &HyperParams,
        seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        hp.check_keys(self.id(), self.allowed_keys())?;
        Ok(match self {
            LearnerId::Lr => Box::new(LogisticModel::fit(x, y, hp.f64_or("l2", 1.0)?)?),
            LearnerId::Knn => Box::new(KnnModel::fit(x, y, hp.usize_or("k", 5)?)?),
            LearnerId::Dt => Box::new(TreeModel::fit(
                x,
                y,
                TreeParams {
                    max_depth: hp.opt_usize("max_depth")?,
                    min_samples_leaf: hp.usize_or("min_samples_leaf", 1)?,
                    m_features: None,
                },
            )?),
            LearnerId::Rf => {
                let d = ForestParams::default();
                Box::new(ForestModel::fit(
                    x,
                    y,
                    ForestParams {
                        n_trees: hp.usize_or("n_trees", d.n_trees)?,
                        max_depth: hp.opt_usize("max_depth")?,
                        min_samples_leaf: hp.usize_or("min_samples_leaf", d.min_samples_leaf)?,
                        m_features: hp.opt_usize("m_features")?,
                        bootstrap: hp.bool_or("bootstrap", d.bootstrap)?,
                    },
                    seed,
                )?)
            }
            LearnerId::Xgb => {
                let d = GbtParams::default();
                let base_score = match hp.get("base_score") {
                    None | Some(ParamValue::Null) => None,
                    Some(_) => Some(hp.f64_or("base_score", 0.5)?),
                };
                Box::new(GbtModel::fit(
                    x,
                    y,
                    GbtParams {
                        n_rounds: hp.usize_or("n_rounds", d.n_rounds)?,
                        eta: hp.f64_or("eta", d.eta)?,
                        max_depth: hp.usize_or("max_depth", d.max_depth)?,
                        lambda: hp.f64_or("lambda", d.lambda)?,
                        gamma: hp.f64_or("gamma", d.gamma)?,
                        min_child_weight: hp.f64_or("min_child_weight", d.min_child_weight)?,
                        base_score,
                    },
                )?)
            }
            LearnerId::Svm => {
                let c = hp.f64_or("C", 1.0)?;
                let kernel = match hp.text_or("kernel", "rbf")? {
                    "linear" => Kernel::Linear,
                    "rbf" => Kernel::Rbf {
                        gamma: hp.f64_or("gamma", 1.0 / x.ncols().max(1) as f64)?,
                    },
                    other => {
                        return Err(Error::InvalidHyperParam {
                            key: "kernel".into(),
                            detail: format!("expected linear or rbf, got `{other}`"),
                        })
                    }
                };
                Box::new(SvmModel::fit(x, y, c, kernel)?)
            }
            LearnerId::Nb => Box::new(NbModel::fit(x, y, hp.f64_or("alpha", 1.0)?)?),
            LearnerId::Lda => Box::new(LdaModel::fit(x, y, hp.f64_or("eps", 1e-4)?)?),
            LearnerId::Dnn => {
                let d = MlpParams::default();
                let params = MlpParams {
                    hidden_sizes: hp.sizes_or("hidden_sizes", &d.hidden_sizes)?,
                    lr: hp.f64_or("lr", d.lr)?,
                    epochs: hp.usize_or("epochs", d.epochs)?,
                    batch: hp.usize_or("batch", d.batch)?,
                    seed: match hp.get("seed") {
                        Some(_) => hp.usize_or("seed", 0)? as u64,
                        None => seed,
                    },
                };
                Box::new(MlpModel::fit(x, y, params)?)
            }
        })
    }
}

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for LearnerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        LearnerId::ALL
            .into_iter()
            .find(|l| l.id() == lower)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown learner `{s}`")))
    }
}

/// Audit document for a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub learner: LearnerId,
    pub hyperparameters: HyperParams,
    pub parameters: serde_json::Value,
}

impl ModelDocument {
    pub fn new(model: &dyn Classifier, hp: &HyperParams) -> Self {
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            learner: model.learner(),
            hyperparameters: hp.clone(),
            parameters: model.parameters(),
        }
    }
}
