//! Gradient-boosted regression trees on the logistic loss, grown with
//! second-order (gradient + Hessian) split gains.

use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, LearnerId};
use crate::error::{Error, Result};
use crate::matrix::{sigmoid, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub eta: f64,
    pub max_depth: usize,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum gain (per added leaf) for a split.
    pub gamma: f64,
    pub min_child_weight: f64,
    /// Initial probability; `None` uses training prevalence.
    pub base_score: Option<f64>,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 100,
            eta: 0.1,
            max_depth: 3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            base_score: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Leaf {
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                RegNode::Leaf { weight } => return *weight,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_margin: f64,
    pub trees: Vec<RegTree>,
    pub params: GbtParams,
    /// Mean training log-loss after each round (index 0 = before boosting).
    pub train_loss: Vec<f64>,
}

/// Closed-form optimal leaf weight −G/(H+λ).
#[inline]
pub fn leaf_weight(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

#[inline]
fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

fn log_loss(margins: &[f64], y: &[u8]) -> f64 {
    margins
        .iter()
        .zip(y)
        .map(|(&z, &yi)| {
            let softplus = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            softplus - f64::from(yi) * z
        })
        .sum::<f64>()
        / margins.len() as f64
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Level-wise exact greedy growth over presorted column orders.
fn grow_tree(x: &Matrix, order: &[Vec<usize>], g: &[f64], h: &[f64], p: &GbtParams) -> RegTree {
    let n = x.nrows();
    let mut nodes = vec![RegNode::Leaf { weight: 0.0 }];
    let mut node_of: Vec<usize> = vec![0; n];
    let mut totals: Vec<(f64, f64)> = vec![(g.iter().sum(), h.iter().sum())];
    let mut frontier: Vec<usize> = vec![0];

    for _depth in 0..p.max_depth {
        if frontier.is_empty() {
            break;
        }
        // slot per frontier node
        let mut slot = vec![usize::MAX; nodes.len()];
        for (s, &id) in frontier.iter().enumerate() {
            slot[id] = s;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        let mut acc = vec![(0.0f64, 0.0f64); frontier.len()];
        let mut last = vec![f64::NAN; frontier.len()];
        for (f, ord) in order.iter().enumerate() {
            acc.iter_mut().for_each(|a| *a = (0.0, 0.0));
            last.iter_mut().for_each(|l| *l = f64::NAN);
            for &i in ord {
                let node = node_of[i];
                let s = match slot.get(node) {
                    Some(&s) if s != usize::MAX => s,
                    _ => continue,
                };
                let v = x.get(i, f);
                if !last[s].is_nan() && v != last[s] {
                    let (gl, hl) = acc[s];
                    let (gt, ht) = totals[node];
                    let (gr, hr) = (gt - gl, ht - hl);
                    if hl >= p.min_child_weight && hr >= p.min_child_weight {
                        let gain = 0.5
                            * (score(gl, hl, p.lambda) + score(gr, hr, p.lambda)
                                - score(gt, ht, p.lambda))
                            - p.gamma;
                        if best[s].is_none_or(|b| gain > b.gain) {
                            best[s] = Some(Candidate {
                                gain,
                                feature: f,
                                threshold: 0.5 * (last[s] + v),
                            });
                        }
                    }
                }
                acc[s].0 += g[i];
                acc[s].1 += h[i];
                last[s] = v;
            }
        }
        let mut next = Vec::new();
        for (s, &id) in frontier.iter().enumerate() {
            let Some(c) = best[s].filter(|c| c.gain > 0.0) else {
                continue;
            };
            let left = nodes.len();
            nodes.push(RegNode::Leaf { weight: 0.0 });
            nodes.push(RegNode::Leaf { weight: 0.0 });
            totals.push((0.0, 0.0));
            totals.push((0.0, 0.0));
            nodes[id] = RegNode::Split {
                feature: c.feature,
                threshold: c.threshold,
                left,
                right: left + 1,
                gain: c.gain,
            };
            next.push(left);
            next.push(left + 1);
        }
        if next.is_empty() {
            break;
        }
        for i in 0..n {
            if let RegNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } = nodes[node_of[i]]
            {
                let child = if x.get(i, feature) <= threshold {
                    left
                } else {
                    right
                };
                node_of[i] = child;
                totals[child].0 += g[i];
                totals[child].1 += h[i];
            }
        }
        frontier = next;
    }
    for (id, node) in nodes.iter_mut().enumerate() {
        if let RegNode::Leaf { weight } = node {
            let (gt, ht) = totals[id];
            *weight = leaf_weight(gt, ht, p.lambda);
        }
    }
    RegTree { nodes }
}

impl GbtModel {
    pub fn fit(x: &Matrix, y: &[u8], params: GbtParams) -> Result<Self> {
        check_training_data(x, y)?;
        if params.n_rounds == 0 {
            return Err(Error::InvalidHyperParam {
                key: "n_rounds".into(),
                detail: "must be >= 1".into(),
            });
        }
        if !(params.eta > 0.0 && params.lambda >= 0.0 && params.gamma >= 0.0) {
            return Err(Error::InvalidHyperParam {
                key: "eta/lambda/gamma".into(),
                detail: format!("need eta > 0, lambda >= 0, gamma >= 0; got {params:?}"),
            });
        }
        let n = x.nrows();
        let prevalence = y.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
        let base = params.base_score.unwrap_or(prevalence);
        if !(base > 0.0 && base < 1.0) {
            return Err(Error::InvalidHyperParam {
                key: "base_score".into(),
                detail: format!("must lie in (0, 1), got {base}"),
            });
        }
        let base_margin = (base / (1.0 - base)).ln();
        let order: Vec<Vec<usize>> = (0..x.ncols())
            .map(|f| {
                let mut o: Vec<usize> = (0..n).collect();
                o.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
                o
            })
            .collect();
        let mut margins = vec![base_margin; n];
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        let mut trees = Vec::with_capacity(params.n_rounds);
        let mut train_loss = vec![log_loss(&margins, y)];
        for _ in 0..params.n_rounds {
            for i in 0..n {
                let pr = sigmoid(margins[i]);
                g[i] = pr - f64::from(y[i]);
                h[i] = (pr * (1.0 - pr)).max(1e-16);
            }
            let tree = grow_tree(x, &order, &g, &h, &params);
            for (i, m) in margins.iter_mut().enumerate() {
                *m += params.eta * tree.predict_row(x.row(i));
            }
            trees.push(tree);
            train_loss.push(log_loss(&margins, y));
        }
        Ok(GbtModel {
            base_margin,
            trees,
            params,
            train_loss,
        })
    }

    pub fn margin(&self, row: &[f64]) -> f64 {
        self.base_margin
            + self.params.eta * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }
}

impl Classifier for GbtModel {
    fn learner(&self) -> LearnerId {
        LearnerId::Xgb
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| sigmoid(self.margin(r))).collect()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}
