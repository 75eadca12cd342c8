//! Second-order gradient-boosted regression trees on the logistic loss.
//!
//! Each round fits a tree to gradients `g = p - y` and hessians
//! `h = p (1 - p)`. Splits are exact greedy over sorted feature values, grown
//! level by level; a split needs positive gain and hessian mass of at least
//! `min_child_weight` on both sides. Leaf weight is `-G / (H + l2_leaf_reg)`,
//! scaled by the learning rate when scoring.

use serde::{Deserialize, Serialize};

use super::{check_training_data, sigmoid, LearnError, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub l2_leaf_reg: f64,
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self { n_rounds: 100, learning_rate: 0.1, max_depth: 3, l2_leaf_reg: 1.0, min_child_weight: 1.0 }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidHyperparameter(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and >= 0");
        }
        if !(self.l2_leaf_reg >= 0.0) {
            return bad("l2_leaf_reg must be >= 0");
        }
        if !(self.min_child_weight.is_finite() && self.min_child_weight >= 0.0) {
            return bad("min_child_weight must be finite and >= 0");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf {
        weight: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn leaf_value(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { weight } => return *weight,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    i = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub n_features: usize,
    /// Logit of the training prevalence.
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl GbtModel {
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| self.learning_rate * t.leaf_value(row)).sum::<f64>()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.raw_score(row))
    }

    /// The model after its first `rounds` trees. Boosting is sequential, so
    /// this equals a model trained with `n_rounds = rounds`.
    pub fn truncated(&self, rounds: usize) -> GbtModel {
        GbtModel { trees: self.trees[..rounds.min(self.trees.len())].to_vec(), ..self.clone() }
    }
}

/// Per-feature row order, with values stored alongside for sequential scans.
struct Presorted {
    rows: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

impl Presorted {
    fn new(x: &Matrix) -> Self {
        let (mut rows, mut values) = (Vec::with_capacity(x.cols()), Vec::with_capacity(x.cols()));
        for j in 0..x.cols() {
            let mut col: Vec<(u32, f64)> = (0..x.rows()).map(|i| (i as u32, x.get(i, j))).collect();
            col.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            rows.push(col.iter().map(|c| c.0).collect());
            values.push(col.iter().map(|c| c.1).collect());
        }
        Self { rows, values }
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn split_threshold(lo: f64, hi: f64) -> f64 {
    let mid = lo + 0.5 * (hi - lo);
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    sorted: &'a Presorted,
    params: &'a GbtParams,
}

impl TreeBuilder<'_> {
    fn leaf_weight(&self, g: f64, h: f64) -> f64 {
        let w = -g / (h + self.params.l2_leaf_reg);
        if w.is_finite() {
            w
        } else {
            0.0
        }
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        let s = g * g / (h + self.params.l2_leaf_reg);
        if s.is_finite() {
            s
        } else {
            0.0
        }
    }

    /// Grows one tree; returns it with the leaf node index of every row.
    fn build(&self, grad: &[f64], hess: &[f64]) -> (RegressionTree, Vec<usize>) {
        let n = self.x.rows();
        let lambda_mcw = self.params.min_child_weight;
        let mut nodes = vec![TreeNode::Leaf { weight: 0.0 }];
        let mut sums = vec![(grad.iter().sum::<f64>(), hess.iter().sum::<f64>())];
        let mut node_of = vec![0usize; n];
        let mut frontier = vec![0usize];

        for _level in 0..self.params.max_depth {
            let active: Vec<usize> =
                frontier.iter().copied().filter(|&k| sums[k].1 >= 2.0 * lambda_mcw && sums[k].1 > 0.0).collect();
            if active.is_empty() {
                break;
            }
            let mut slot_of = vec![usize::MAX; nodes.len()];
            for (s, &k) in active.iter().enumerate() {
                slot_of[k] = s;
            }
            let m = active.len();
            let parent_score: Vec<f64> = active.iter().map(|&k| self.score(sums[k].0, sums[k].1)).collect();
            let mut best: Vec<Option<Candidate>> = vec![None; m];
            let mut gl = vec![0.0; m];
            let mut hl = vec![0.0; m];
            let mut last = vec![f64::NAN; m];

            // Gradient pair and slot per row, so the scan touches one array.
            let packed: Vec<(f64, f64, u32)> = (0..n)
                .map(|r| {
                    let s = slot_of[node_of[r]];
                    (grad[r], hess[r], if s == usize::MAX { u32::MAX } else { s as u32 })
                })
                .collect();
            let l2 = self.params.l2_leaf_reg;
            let mut best_gain: Vec<f64> = vec![0.0; m];
            for (feature, (rows, values)) in self.sorted.rows.iter().zip(&self.sorted.values).enumerate() {
                gl.iter_mut().for_each(|v| *v = 0.0);
                hl.iter_mut().for_each(|v| *v = 0.0);
                last.iter_mut().for_each(|v| *v = f64::NAN);
                for (&r, &v) in rows.iter().zip(values) {
                    let (gr, hr, s) = packed[r as usize];
                    if s == u32::MAX {
                        continue;
                    }
                    let s = s as usize;
                    if v > last[s] {
                        let (g, h) = sums[active[s]];
                        let (gls, hls) = (gl[s], hl[s]);
                        let (grs, hrs) = (g - gls, h - hls);
                        if hls >= lambda_mcw && hrs >= lambda_mcw {
                            let gain = 0.5 * (gls * gls / (hls + l2) + grs * grs / (hrs + l2) - parent_score[s]);
                            if gain > best_gain[s] {
                                best_gain[s] = gain;
                                best[s] = Some(Candidate { gain, feature, threshold: split_threshold(last[s], v) });
                            }
                        }
                    }
                    gl[s] += gr;
                    hl[s] += hr;
                    last[s] = v;
                }
            }

            let mut next = Vec::new();
            let mut split_of_slot: Vec<Option<(usize, usize, Candidate)>> = vec![None; m];
            for (s, &k) in active.iter().enumerate() {
                if let Some(c) = best[s] {
                    let left = nodes.len();
                    nodes.push(TreeNode::Leaf { weight: 0.0 });
                    nodes.push(TreeNode::Leaf { weight: 0.0 });
                    sums.push((0.0, 0.0));
                    sums.push((0.0, 0.0));
                    nodes[k] = TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right: left + 1,
                        gain: c.gain,
                    };
                    split_of_slot[s] = Some((left, left + 1, c));
                    next.extend([left, left + 1]);
                }
            }
            if next.is_empty() {
                break;
            }
            for r in 0..n {
                let s = slot_of.get(node_of[r]).copied().unwrap_or(usize::MAX);
                if s == usize::MAX {
                    continue;
                }
                if let Some((left, right, c)) = split_of_slot[s] {
                    let child = if self.x.get(r, c.feature) < c.threshold { left } else { right };
                    node_of[r] = child;
                    sums[child].0 += grad[r];
                    sums[child].1 += hess[r];
                }
            }
            frontier = next;
        }

        for (k, node) in nodes.iter_mut().enumerate() {
            if let TreeNode::Leaf { weight } = node {
                *weight = self.leaf_weight(sums[k].0, sums[k].1);
            }
        }
        (RegressionTree { nodes }, node_of)
    }
}

pub fn train_gbt(x: &Matrix, y: &[u8], params: &GbtParams) -> Result<GbtModel, LearnError> {
    params.validate()?;
    let pos = check_training_data(x, y)?;
    let n = y.len();
    let prevalence = pos as f64 / n as f64;
    let base_score = (prevalence / (1.0 - prevalence)).ln();
    let sorted = Presorted::new(x);
    let builder = TreeBuilder { x, sorted: &sorted, params };

    let mut raw = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            grad[i] = p - f64::from(y[i]);
            hess[i] = (p * (1.0 - p)).max(1e-16);
        }
        let (tree, leaf_of) = builder.build(&grad, &hess);
        for i in 0..n {
            if let TreeNode::Leaf { weight } = tree.nodes[leaf_of[i]] {
                raw[i] += params.learning_rate * weight;
            }
        }
        trees.push(tree);
    }
    Ok(GbtModel { n_features: x.cols(), base_score, learning_rate: params.learning_rate, trees })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rounds_is_prevalence_logit() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]);
        let m = train_gbt(&x, &[0, 0, 0, 1], &GbtParams { n_rounds: 0, ..Default::default() }).unwrap();
        for r in 0..4 {
            assert!((m.predict_row(x.row(r)) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_matches_shorter_training() {
        let x = Matrix::from_rows(&[[1.0, 0.3], [2.0, 0.1], [3.0, 0.7], [4.0, 0.2], [5.0, 0.9], [6.0, 0.4]]);
        let y = [0, 1, 0, 1, 1, 0];
        let p = GbtParams { n_rounds: 12, min_child_weight: 0.0, ..Default::default() };
        let long = train_gbt(&x, &y, &p).unwrap();
        let short = train_gbt(&x, &y, &GbtParams { n_rounds: 5, ..p }).unwrap();
        assert_eq!(long.truncated(5), short);
    }

    #[test]
    fn depth_respected() {
        let x = Matrix::from_rows(&(0..20).map(|i| [i as f64, (i * 7 % 5) as f64]).collect::<Vec<_>>());
        let y: Vec<u8> = (0..20).map(|i| u8::from(i % 3 == 0)).collect();
        let m =
            train_gbt(&x, &y, &GbtParams { n_rounds: 5, max_depth: 2, min_child_weight: 0.0, ..Default::default() })
                .unwrap();
        assert!(m.trees.iter().all(|t| t.depth() <= 2));
    }
}
