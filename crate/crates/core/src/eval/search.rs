//! Exhaustive grid search scored by mean cross-validated F1, with SMOTE
//! applied inside each training fold only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::CvPlan;
use super::metrics::f1_score;
use crate::balance::{smote_resample, ResampledSet, SmoteConfig};
use crate::error::{Error, Result};
use crate::learners::{Classifier, Grid, HyperParams, LearnerId};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, derive_seed_idx};

/// Provenance tags for one (repeat, fold) split, checked for leakage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub repeat: usize,
    pub fold: usize,
    pub train_real: usize,
    pub train_synthetic: usize,
    pub validation_rows: usize,
    /// Validation rows tagged synthetic; must be zero.
    pub validation_synthetic: usize,
    /// Synthetic training rows with a validation row as a parent; must be zero.
    pub validation_parents: usize,
    /// Real training rows that are also validation rows; must be zero.
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub hp: HyperParams,
    /// F1 per (repeat, fold), in plan order.
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    pub std_f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CandidateResult {
    pub fn is_valid(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug)]
pub struct GridSearchResult {
    pub learner: LearnerId,
    pub candidates: Vec<CandidateResult>,
    pub best_index: usize,
    pub best_hp: HyperParams,
    pub model: Box<dyn Classifier>,
    pub audit: Vec<FoldAudit>,
    /// Rows (real + synthetic) the refit model was trained on.
    pub refit_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// `None` disables oversampling.
    pub smote: Option<SmoteConfig>,
    pub seed: u64,
}

/// Training portion of one split, oversampled if requested. Row tags say
/// which rows are synthetic and which original row each real row came from.
struct PreparedFold {
    x: Matrix,
    y: Vec<u8>,
    validation: Vec<usize>,
    audit: FoldAudit,
}

fn resample(x: &Matrix, y: &[u8], smote: Option<&SmoteConfig>, seed: u64) -> Result<ResampledSet> {
    match smote {
        Some(cfg) => smote_resample(x, y, &SmoteConfig { seed, ..*cfg }),
        None => Ok(ResampledSet {
            matrix: x.clone(),
            labels: y.to_vec(),
            synthetic: vec![false; y.len()],
            parents: Vec::new(),
            minority_label: 1,
        }),
    }
}

fn prepare_folds(
    x: &Matrix,
    y: &[u8],
    plan: &CvPlan,
    opts: &SearchOptions,
) -> Result<Vec<PreparedFold>> {
    let smote_seed = derive_seed(opts.seed, "smote");
    plan.folds()
        .into_par_iter()
        .map(|f| {
            let k = (f.repeat * plan.n_folds + f.fold) as u64;
            let tx = x.select_rows(&f.train);
            let ty: Vec<u8> = f.train.iter().map(|&i| y[i]).collect();
            let rs = resample(
                &tx,
                &ty,
                opts.smote.as_ref(),
                derive_seed_idx(smote_seed, k),
            )?;
            // map every training row back to its source row (None = synthetic)
            let mut origin: Vec<Option<usize>> = f.train.iter().map(|&i| Some(i)).collect();
            origin.resize(rs.labels.len(), None);
            let in_validation = |i: usize| f.validation.binary_search(&i).is_ok();
            let validation_parents = rs
                .parents
                .iter()
                .filter(|&&(a, b)| in_validation(f.train[a]) || in_validation(f.train[b]))
                .count();
            // validation rows are taken from the untouched input matrix, so
            // their tags are all real by construction; count them anyway
            let validation_synthetic = f.validation.iter().filter(|&&i| i >= x.nrows()).count();
            let train_synthetic = origin.iter().filter(|o| o.is_none()).count();
            let overlap = origin
                .iter()
                .flatten()
                .filter(|&&i| in_validation(i))
                .count();
            Ok(PreparedFold {
                audit: FoldAudit {
                    repeat: f.repeat,
                    fold: f.fold,
                    train_real: f.train.len(),
                    train_synthetic,
                    validation_rows: f.validation.len(),
                    validation_synthetic,
                    validation_parents,
                    overlap,
                },
                x: rs.matrix,
                y: rs.labels,
                validation: f.validation,
            })
        })
        .collect()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Search `grid` for `learner` on `(x, y)` under `plan`, then refit the
/// winner on the whole (oversampled) training set.
pub fn grid_search(
    learner: LearnerId,
    grid: &Grid,
    plan: &CvPlan,
    x: &Matrix,
    y: &[u8],
    opts: &SearchOptions,
) -> Result<GridSearchResult> {
    let candidates = grid.expand();
    if candidates.is_empty() || grid.size() == 0 {
        return Err(Error::InvalidConfig(format!("empty grid for {learner}")));
    }
    if plan.n_rows() != x.nrows() || y.len() != x.nrows() {
        return Err(Error::LengthMismatch {
            expected: x.nrows(),
            got: plan.n_rows().min(y.len()),
        });
    }
    for hp in &candidates {
        hp.check_keys(learner.id(), learner.allowed_keys())?;
    }
    let folds = prepare_folds(x, y, plan, opts)?;
    let fit_seed = derive_seed(opts.seed, learner.id());
    let tasks: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let scores: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|&(c, f)| {
            let fold = &folds[f];
            let model = learner.fit(
                &fold.x,
                &fold.y,
                &candidates[c],
                derive_seed_idx(fit_seed, f as u64),
            )?;
            let vx = x.select_rows(&fold.validation);
            let vy: Vec<u8> = fold.validation.iter().map(|&i| y[i]).collect();
            f1_score(&vy, &model.predict(&vx))
        })
        .collect();

    let mut results = Vec::with_capacity(candidates.len());
    for (c, hp) in candidates.iter().enumerate() {
        let chunk = &scores[c * folds.len()..(c + 1) * folds.len()];
        let error = chunk
            .iter()
            .find_map(|r| r.as_ref().err().map(|e| e.to_string()));
        let fold_f1: Vec<f64> = chunk
            .iter()
            .map(|r| *r.as_ref().unwrap_or(&f64::NAN))
            .collect();
        let (mean_f1, std_f1) = if error.is_none() {
            mean_std(&fold_f1)
        } else {
            (f64::NAN, f64::NAN)
        };
        results.push(CandidateResult {
            hp: hp.clone(),
            fold_f1,
            mean_f1,
            std_f1,
            error,
        });
    }
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if r.is_valid() && best.is_none_or(|b| r.mean_f1 > results[b].mean_f1) {
            best = Some(i);
        }
    }
    let best_index = best.ok_or_else(|| {
        let first = results
            .iter()
            .find_map(|r| r.error.clone())
            .unwrap_or_default();
        Error::SearchFailure(format!(
            "{learner}: every candidate failed; first error: {first}"
        ))
    })?;
    let best_hp = results[best_index].hp.clone();
    let full = resample(
        x,
        y,
        opts.smote.as_ref(),
        derive_seed(derive_seed(opts.seed, "smote"), "refit"),
    )?;
    let model = learner.fit(
        &full.matrix,
        &full.labels,
        &best_hp,
        derive_seed(fit_seed, "refit"),
    )?;
    Ok(GridSearchResult {
        learner,
        candidates: results,
        best_index,
        best_hp,
        model,
        audit: folds.into_iter().map(|f| f.audit).collect(),
        refit_rows: full.labels.len(),
    })
}
