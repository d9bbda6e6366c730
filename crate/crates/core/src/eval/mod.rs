//! Metrics, curves, cross-validation plans and grid search.

pub mod cv;
pub mod metrics;
pub mod search;

pub use cv::{make_cv_plan, CvPlan, Fold};
pub use metrics::{
    average_precision, basic_metrics, cohens_kappa, confusion, f1_score, midranks, pr_curve,
    roc_auc, roc_curve, BasicMetrics, ConfusionMatrix, MetricReport, PrPoint, RocPoint,
};
pub use search::{grid_search, CandidateResult, FoldAudit, GridSearchResult, SearchOptions};

use crate::error::Result;
use crate::learners::Classifier;
use crate::matrix::Matrix;

/// Test-set report for a fitted model, with training F1 filled in from
/// `train` when given.
pub fn evaluate(
    model: &dyn Classifier,
    test_x: &Matrix,
    test_y: &[u8],
    train: Option<(&Matrix, &[u8])>,
) -> Result<MetricReport> {
    let mut report = MetricReport::from_scores(test_y, &model.predict_proba(test_x))?;
    if let Some((tx, ty)) = train {
        report.train_f1 = Some(f1_score(ty, &model.predict(tx))?);
    }
    Ok(report)
}
