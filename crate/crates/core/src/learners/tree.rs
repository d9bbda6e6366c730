//! CART classification tree grown greedily on Gini impurity.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{check_training_data, Classifier, LearnerId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        counts: [f64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        counts: [f64; 2],
        decrease: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Columns drawn per split; `None` considers all of them.
    pub m_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            m_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
    pub params: TreeParams,
    pub n_features: usize,
    /// Total weighted Gini decrease per column, normalised to sum to 1.
    pub importances: Vec<f64>,
}

#[inline]
pub fn gini(counts: [f64; 2]) -> f64 {
    let n = counts[0] + counts[1];
    if n <= 0.0 {
        return 0.0;
    }
    let p = counts[1] / n;
    2.0 * p * (1.0 - p)
}

/// Dense per-column ranks of a training matrix, computed once and shared by
/// every tree grown on it. Sorting integer keys is much cheaper than sorting
/// floats at every node.
pub(crate) struct ColumnRanks {
    n: usize,
    /// Column-major; `ranks[j * n + i]` indexes `distinct[j]`.
    ranks: Vec<u32>,
    distinct: Vec<Vec<f64>>,
}

impl ColumnRanks {
    pub(crate) fn new(x: &Matrix) -> Self {
        let n = x.nrows();
        let mut ranks = vec![0u32; n * x.ncols()];
        let mut distinct = Vec::with_capacity(x.ncols());
        for j in 0..x.ncols() {
            let mut vals = x.column(j);
            vals.sort_unstable_by(f64::total_cmp);
            vals.dedup();
            for i in 0..n {
                let r = vals.partition_point(|v| v.total_cmp(&x.get(i, j)).is_lt());
                ranks[j * n + i] = r as u32;
            }
            distinct.push(vals);
        }
        ColumnRanks { n, ranks, distinct }
    }
}

struct Builder<'a> {
    x: &'a Matrix,
    index: &'a ColumnRanks,
    y: &'a [u8],
    /// Multiplicity of each row in the training sample.
    weight: Vec<u32>,
    params: TreeParams,
    nodes: Vec<Node>,
    importances: Vec<f64>,
    /// `rank << 33 | label << 32 | weight` per row of the node being scanned.
    scratch: Vec<u64>,
    /// Per-rank label counts for large nodes; all zero between scans.
    hist: Vec<[u32; 2]>,
    features: Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> [f64; 2] {
        let mut c = [0.0, 0.0];
        for &i in idx {
            c[usize::from(self.y[i])] += f64::from(self.weight[i]);
        }
        c
    }

    fn candidate_features(&mut self, rng: Option<&mut Rng>) -> Vec<usize> {
        let d = self.x.ncols();
        match (self.params.m_features, rng) {
            (Some(m), Some(rng)) => {
                let m = m.min(d);
                // partial Fisher-Yates; draw order decides ties, so no column
                // position is favoured
                for i in 0..m {
                    let j = rng.random_range(i..d);
                    self.features.swap(i, j);
                }
                self.features[..m].to_vec()
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(
        &mut self,
        idx: &[usize],
        counts: [f64; 2],
        features: &[usize],
    ) -> Option<BestSplit> {
        let n = counts[0] + counts[1];
        let parent = n * gini(counts);
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        let total = n as usize;
        let mut consider = |f: usize, nl: usize, left: [f64; 2], v: f64, next: f64| {
            let nr = total - nl;
            if nl < min_leaf || nr < min_leaf {
                return;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            let decrease = parent - nl as f64 * gini(left) - nr as f64 * gini(right);
            if best.as_ref().is_none_or(|b| decrease > b.decrease) {
                best = Some(BestSplit {
                    feature: f,
                    threshold: 0.5 * (v + next),
                    decrease,
                });
            }
        };
        let n_all = self.index.n;
        for &f in features {
            let col = &self.index.ranks[f * n_all..(f + 1) * n_all];
            let distinct = &self.index.distinct[f];
            if distinct.len() <= 4 * idx.len() {
                // counting pass: same split points in the same order as the sort
                for &i in idx {
                    self.hist[col[i] as usize][usize::from(self.y[i])] += self.weight[i];
                }
                let mut left = [0.0, 0.0];
                let mut nl = 0;
                let mut prev: Option<usize> = None;
                for r in 0..distinct.len() {
                    let h = std::mem::take(&mut self.hist[r]);
                    if h == [0, 0] {
                        continue;
                    }
                    if let Some(p) = prev {
                        consider(f, nl, left, distinct[p], distinct[r]);
                    }
                    left[0] += f64::from(h[0]);
                    left[1] += f64::from(h[1]);
                    nl += (h[0] + h[1]) as usize;
                    prev = Some(r);
                }
                continue;
            }
            self.scratch.clear();
            self.scratch.extend(idx.iter().map(|&i| {
                (u64::from(col[i]) << 33) | (u64::from(self.y[i]) << 32) | u64::from(self.weight[i])
            }));
            self.scratch.sort_unstable();
            let mut left = [0.0, 0.0];
            let mut nl = 0;
            for s in 0..self.scratch.len() - 1 {
                let key = self.scratch[s];
                let w = key & 0xFFFF_FFFF;
                left[((key >> 32) & 1) as usize] += w as f64;
                nl += w as usize;
                let (r, r_next) = (key >> 33, self.scratch[s + 1] >> 33);
                if r != r_next {
                    consider(f, nl, left, distinct[r as usize], distinct[r_next as usize]);
                }
            }
        }
        best.filter(|b| b.decrease > 1e-12)
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize, mut rng: Option<&mut Rng>) -> usize {
        let counts = self.counts(&idx);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        let pure = counts[0] == 0.0 || counts[1] == 0.0;
        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        let n = (counts[0] + counts[1]) as usize;
        if pure || !depth_ok || n < 2 * self.params.min_samples_leaf.max(1) {
            return id;
        }
        let features = self.candidate_features(rng.as_deref_mut());
        let Some(split) = self.best_split(&idx, counts, &features) else {
            return id;
        };
        let (l_idx, r_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x.get(i, split.feature) <= split.threshold);
        drop(idx);
        self.importances[split.feature] += split.decrease;
        let left = self.grow(l_idx, depth + 1, rng.as_deref_mut());
        let right = self.grow(r_idx, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            counts,
            decrease: split.decrease,
        };
        id
    }
}

impl TreeModel {
    pub fn fit(x: &Matrix, y: &[u8], params: TreeParams) -> Result<Self> {
        check_training_data(x, y)?;
        if params.min_samples_leaf == 0 {
            return Err(Error::InvalidHyperParam {
                key: "min_samples_leaf".into(),
                detail: "must be >= 1".into(),
            });
        }
        let index = ColumnRanks::new(x);
        Ok(Self::fit_rows(
            x,
            &index,
            y,
            (0..x.nrows()).collect(),
            params,
            None,
        ))
    }

    /// Grow on the given row indices (repeats allowed, as in a bootstrap).
    /// Repeats become weights, so each distinct row is scanned once.
    pub(crate) fn fit_rows(
        x: &Matrix,
        index: &ColumnRanks,
        y: &[u8],
        rows: Vec<usize>,
        params: TreeParams,
        rng: Option<&mut Rng>,
    ) -> Self {
        let mut weight = vec![0u32; x.nrows()];
        for &i in &rows {
            weight[i] += 1;
        }
        let unique: Vec<usize> = (0..x.nrows()).filter(|&i| weight[i] > 0).collect();
        let mut b = Builder {
            x,
            index,
            y,
            weight,
            params,
            nodes: Vec::new(),
            importances: vec![0.0; x.ncols()],
            scratch: Vec::with_capacity(unique.len()),
            hist: vec![[0, 0]; index.distinct.iter().map(Vec::len).max().unwrap_or(0)],
            features: (0..x.ncols()).collect(),
        };
        b.grow(unique, 0, rng);
        let total: f64 = b.importances.iter().sum();
        if total > 0.0 {
            b.importances.iter_mut().for_each(|v| *v /= total);
        }
        TreeModel {
            nodes: b.nodes,
            params,
            n_features: x.ncols(),
            importances: b.importances,
        }
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf(&self, row: &[f64]) -> usize {
        self.leaf_with(|f| row[f])
    }

    fn leaf_with(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    id = if value(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Columns tested on the path `row` takes from the root, in order.
    pub fn path_features(&self, row: &[f64]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut id = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
            ..
        } = &self.nodes[id]
        {
            out.push(*feature);
            id = if row[*feature] <= *threshold {
                *left
            } else {
                *right
            };
        }
        out
    }

    fn leaf_proba(&self, id: usize) -> f64 {
        match &self.nodes[id] {
            Node::Leaf { counts } => counts[1] / (counts[0] + counts[1]),
            Node::Split { .. } => unreachable!("leaf() stops at leaves"),
        }
    }

    pub fn proba_row(&self, row: &[f64]) -> f64 {
        self.leaf_proba(self.leaf(row))
    }

    /// [`Self::proba_row`] with column `column` replaced by `value`.
    pub fn proba_row_with(&self, row: &[f64], column: usize, value: f64) -> f64 {
        self.leaf_proba(self.leaf_with(|f| if f == column { value } else { row[f] }))
    }

    /// Per column, whether any split tests it.
    pub fn used_features(&self) -> Vec<bool> {
        let mut used = vec![false; self.n_features];
        for node in &self.nodes {
            if let Node::Split { feature, .. } = node {
                used[*feature] = true;
            }
        }
        used
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match &nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Classifier for TreeModel {
    fn learner(&self) -> LearnerId {
        LearnerId::Dt
    }

    fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.proba_row(r)).collect()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_of_pure_node_is_zero() {
        assert_eq!(gini([5.0, 0.0]), 0.0);
        assert_eq!(gini([2.0, 2.0]), 0.5);
    }

    #[test]
    fn repeated_rows_match_physical_copies() {
        let base: Vec<[f64; 2]> = (0..40)
            .map(|i| [((i * 7) % 11) as f64, ((i * 3) % 5) as f64])
            .collect();
        let y: Vec<u8> = (0..40)
            .map(|i| u8::from((i * 7) % 11 > 4 || i % 6 == 0))
            .collect();
        let rows: Vec<usize> = (0..40).flat_map(|i| vec![i; 1 + i % 3]).collect();
        let params = TreeParams {
            min_samples_leaf: 3,
            ..TreeParams::default()
        };
        let x = Matrix::from_rows(&base).unwrap();
        let weighted =
            TreeModel::fit_rows(&x, &ColumnRanks::new(&x), &y, rows.clone(), params, None);
        let copies = Matrix::from_rows(&rows.iter().map(|&i| base[i]).collect::<Vec<_>>()).unwrap();
        let y_copies: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
        let plain = TreeModel::fit(&copies, &y_copies, params).unwrap();
        assert_eq!(weighted.parameters(), plain.parameters());
    }

    #[test]
    fn pure_labels_give_single_leaf() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]).unwrap();
        let t = TreeModel::fit_rows(
            &x,
            &ColumnRanks::new(&x),
            &[1, 1, 1],
            vec![0, 1, 2],
            TreeParams::default(),
            None,
        );
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn one_dimensional_step() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [1.0], [1.0]]).unwrap();
        let y = [0, 0, 1, 1];
        let t = TreeModel::fit(&x, &y, TreeParams::default()).unwrap();
        assert_eq!(t.nodes.len(), 3);
        match &t.nodes[0] {
            Node::Split {
                threshold,
                decrease,
                ..
            } => {
                assert_eq!(*threshold, 0.5);
                assert!(*decrease > 0.0);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(t.predict(&x), y.to_vec());
    }

    #[test]
    fn leaves_partition_inputs_and_splits_decrease_impurity() {
        let x = Matrix::from_rows(&[
            [0.0, 3.0],
            [1.0, 2.0],
            [2.0, 2.0],
            [3.0, 0.0],
            [4.0, 1.0],
            [5.0, 5.0],
        ])
        .unwrap();
        let y = [0, 1, 0, 1, 1, 0];
        let t = TreeModel::fit(&x, &y, TreeParams::default()).unwrap();
        for n in &t.nodes {
            if let Node::Split { decrease, .. } = n {
                assert!(*decrease > 0.0);
            }
        }
        assert_eq!(t.predict(&x), y.to_vec());
        assert!((t.importances.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn depth_limit_respected() {
        let x = Matrix::from_rows(&(0..32).map(|i| [i as f64]).collect::<Vec<_>>()).unwrap();
        let y: Vec<u8> = (0..32).map(|i| (i % 2) as u8).collect();
        let t = TreeModel::fit(
            &x,
            &y,
            TreeParams {
                max_depth: Some(3),
                ..TreeParams::default()
            },
        )
        .unwrap();
        assert!(t.depth() <= 3);
    }
}
