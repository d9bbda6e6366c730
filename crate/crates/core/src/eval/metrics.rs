//! Classification metrics at a fixed 0.5 threshold and ranking metrics over
//! scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            expected: a,
            got: b,
        });
    }
    Ok(())
}

pub fn confusion(labels: &[u8], predictions: &[u8]) -> Result<ConfusionMatrix> {
    check_lengths(labels.len(), predictions.len())?;
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(predictions) {
        match (y == 1, p == 1) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Precision had no predicted positives.
    pub precision_degenerate: bool,
    /// Recall had no actual positives.
    pub recall_degenerate: bool,
}

/// Zero denominators give 0 and raise the matching flag.
pub fn basic_metrics(cm: &ConfusionMatrix) -> BasicMetrics {
    let n = cm.total();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    BasicMetrics {
        accuracy: ratio(cm.tp + cm.tn, n),
        precision,
        recall,
        f1,
        precision_degenerate: cm.tp + cm.fp == 0,
        recall_degenerate: cm.tp + cm.fn_ == 0,
    }
}

pub fn f1_score(labels: &[u8], predictions: &[u8]) -> Result<f64> {
    Ok(basic_metrics(&confusion(labels, predictions)?).f1)
}

pub fn cohens_kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.total() as f64;
    if n == 0.0 {
        return Err(Error::UndefinedMetric("kappa on empty input".into()));
    }
    let p0 = (cm.tp + cm.tn) as f64 / n;
    let actual_pos = (cm.tp + cm.fn_) as f64;
    let pred_pos = (cm.tp + cm.fp) as f64;
    let pe = (actual_pos * pred_pos + (n - actual_pos) * (n - pred_pos)) / (n * n);
    if pe >= 1.0 {
        return Err(Error::UndefinedMetric(
            "kappa: chance agreement is 1".into(),
        ));
    }
    Ok((p0 - pe) / (1.0 - pe))
}

fn check_scores(scores: &[f64], labels: &[u8]) -> Result<()> {
    check_lengths(labels.len(), scores.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    Ok(())
}

/// Row order by descending score, ties by ascending row index.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Σ_k P(k)·[R(k) − R(k−1)] over the ranking.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric(
            "average precision needs a positive".into(),
        ));
    }
    let mut tp = 0usize;
    let mut ap = 0.0;
    for (k, &i) in ranking(scores).iter().enumerate() {
        if labels[i] == 1 {
            tp += 1;
            ap += (tp as f64 / (k + 1) as f64) / n_pos as f64;
        }
    }
    Ok(ap)
}

/// Ascending midranks (1-based), tied scores share their mean rank.
pub fn midranks(scores: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let mid = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = mid;
        }
        start = end;
    }
    ranks
}

/// Probability a random positive outscores a random negative, ties counted
/// as one half.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::UndefinedMetric("AUC needs both classes".into()));
    }
    let ranks = midranks(scores);
    let pos_rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &y)| y == 1)
        .map(|(r, _)| r)
        .sum();
    Ok((pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Cumulative (threshold, tp, fp) after admitting each distinct score, from
/// the highest down.
fn sweep(scores: &[f64], labels: &[u8]) -> Vec<(f64, usize, usize)> {
    let order = ranking(scores);
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0, 0);
    for (k, &i) in order.iter().enumerate() {
        if labels[i] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_tie = order.get(k + 1).is_none_or(|&j| scores[j] != scores[i]);
        if last_of_tie {
            out.push((scores[i], tp, fp));
        }
    }
    out
}

/// Points from (0,0) at threshold +∞ to (1,1) at the lowest score.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "ROC curve needs both classes".into(),
        ));
    }
    let mut pts = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    pts.extend(
        sweep(scores, labels)
            .into_iter()
            .map(|(t, tp, fp)| RocPoint {
                threshold: t,
                fpr: fp as f64 / n_neg as f64,
                tpr: tp as f64 / n_pos as f64,
            }),
    );
    Ok(pts)
}

/// Precision/recall per threshold, starting from (recall 0, precision 1).
pub fn pr_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<PrPoint>> {
    check_scores(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("PR curve needs a positive".into()));
    }
    let mut pts = vec![PrPoint {
        threshold: f64::INFINITY,
        recall: 0.0,
        precision: 1.0,
    }];
    pts.extend(
        sweep(scores, labels)
            .into_iter()
            .map(|(t, tp, fp)| PrPoint {
                threshold: t,
                recall: tp as f64 / n_pos as f64,
                precision: tp as f64 / (tp + fp) as f64,
            }),
    );
    Ok(pts)
}

/// Every metric reported per model. Undefined ranking metrics and kappa are
/// `None` with a note in `flags` rather than aborting the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub average_precision: Option<f64>,
    pub auc: Option<f64>,
    pub cohens_kappa: Option<f64>,
    pub train_f1: Option<f64>,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl MetricReport {
    pub fn from_scores(labels: &[u8], scores: &[f64]) -> Result<Self> {
        check_scores(scores, labels)?;
        let preds: Vec<u8> = scores.iter().map(|&p| u8::from(p >= 0.5)).collect();
        let cm = confusion(labels, &preds)?;
        let b = basic_metrics(&cm);
        let mut flags = Vec::new();
        if b.precision_degenerate {
            flags.push("precision: no predicted positives".to_string());
        }
        if b.recall_degenerate {
            flags.push("recall: no actual positives".to_string());
        }
        let mut keep = |r: Result<f64>| match r {
            Ok(v) => Some(v),
            Err(e) => {
                flags.push(e.to_string());
                None
            }
        };
        let average_precision = keep(average_precision(scores, labels));
        let auc = keep(roc_auc(scores, labels));
        let cohens_kappa = keep(cohens_kappa(&cm));
        Ok(MetricReport {
            confusion: cm,
            accuracy: b.accuracy,
            precision: b.precision,
            recall: b.recall,
            f1: b.f1,
            average_precision,
            auc,
            cohens_kappa,
            train_f1: None,
            flags,
        })
    }

    /// Row labels and values in report order; undefined values are NaN.
    pub fn rows(&self) -> [(&'static str, f64); 8] {
        let v = |o: Option<f64>| o.unwrap_or(f64::NAN);
        [
            ("Accuracy", self.accuracy),
            ("Precision", self.precision),
            ("Recall", self.recall),
            ("F1 Score", self.f1),
            ("Average Precision", v(self.average_precision)),
            ("AUC", v(self.auc)),
            ("Cohen's Kappa", v(self.cohens_kappa)),
            ("Train Set F1 Score", v(self.train_f1)),
        ]
    }
}
