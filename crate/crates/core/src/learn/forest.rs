//! Random forest of gini decision trees.
//!
//! Tree `t` draws its bootstrap sample and per-split feature subsets from a
//! stream seeded by `(seed, t)`, so trees build in parallel without changing
//! the result. A tree's score is the positive fraction of its leaf, weighted by
//! bootstrap multiplicity; the forest averages the trees.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_data, LearnError, Matrix};
use crate::seeds::{purpose, rng_for};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Fraction of features drawn at each split; `None` means `sqrt(d)`.
    pub feature_fraction: Option<f64>,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 200, max_depth: 8, feature_fraction: None, min_leaf: 1, bootstrap: true }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        if self.n_trees == 0 {
            return Err(LearnError::InvalidHyperparameter("n_trees must be >= 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(LearnError::InvalidHyperparameter("min_leaf must be >= 1".into()));
        }
        if let Some(f) = self.feature_fraction {
            if !(f > 0.0 && f <= 1.0) {
                return Err(LearnError::InvalidHyperparameter("feature_fraction must lie in (0, 1]".into()));
            }
        }
        Ok(())
    }

    fn features_per_split(&self, d: usize) -> usize {
        let k = match self.feature_fraction {
            Some(f) => (f * d as f64).ceil() as usize,
            None => (d as f64).sqrt().round() as usize,
        };
        k.clamp(1, d.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ForestNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { positive_fraction: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<ForestNode>,
    /// Training rows left out of this tree's bootstrap sample.
    pub out_of_bag: Vec<usize>,
}

impl DecisionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                ForestNode::Leaf { positive_fraction } => return *positive_fraction,
                ForestNode::Split { feature, threshold, left, right } => {
                    i = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [u8],
    params: &'a ForestParams,
    k_features: usize,
}

fn gini_sum(pos: f64, total: f64) -> f64 {
    // total * gini impurity
    if total <= 0.0 {
        0.0
    } else {
        let p = pos / total;
        2.0 * total * p * (1.0 - p)
    }
}

impl Grower<'_> {
    /// `rows` holds (row, multiplicity) pairs.
    fn grow(&self, rows: Vec<(usize, u32)>, depth: usize, nodes: &mut Vec<ForestNode>, rng: &mut ChaCha8Rng) -> usize {
        let total: f64 = rows.iter().map(|r| f64::from(r.1)).sum();
        let pos: f64 = rows.iter().filter(|r| self.y[r.0] == 1).map(|r| f64::from(r.1)).sum();
        let id = nodes.len();
        nodes.push(ForestNode::Leaf { positive_fraction: pos / total });
        let min_leaf = self.params.min_leaf as f64;
        if depth >= self.params.max_depth || pos == 0.0 || pos == total || total < 2.0 * min_leaf {
            return id;
        }

        let parent = gini_sum(pos, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = rows.clone();
        for feature in sample(rng, self.x.cols(), self.k_features).into_iter() {
            sorted.sort_by(|a, b| self.x.get(a.0, feature).total_cmp(&self.x.get(b.0, feature)).then(a.0.cmp(&b.0)));
            let (mut lt, mut lp) = (0.0, 0.0);
            for w in 0..sorted.len() - 1 {
                let (r, m) = sorted[w];
                lt += f64::from(m);
                if self.y[r] == 1 {
                    lp += f64::from(m);
                }
                let lo = self.x.get(r, feature);
                let hi = self.x.get(sorted[w + 1].0, feature);
                if hi <= lo || lt < min_leaf || total - lt < min_leaf {
                    continue;
                }
                let decrease = parent - gini_sum(lp, lt) - gini_sum(pos - lp, total - lt);
                if decrease > best.map_or(1e-12, |b| b.0) {
                    let mid = lo + 0.5 * (hi - lo);
                    let threshold = if mid > lo && mid <= hi { mid } else { hi };
                    best = Some((decrease, feature, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let (left_rows, right_rows): (Vec<_>, Vec<_>) =
            rows.into_iter().partition(|r| self.x.get(r.0, feature) < threshold);
        let left = self.grow(left_rows, depth + 1, nodes, rng);
        let right = self.grow(right_rows, depth + 1, nodes, rng);
        nodes[id] = ForestNode::Split { feature, threshold, left, right };
        id
    }

    fn tree(&self, seed: u64, t: usize) -> DecisionTree {
        let mut rng = rng_for(seed, &[purpose::FOREST_TREE, t as u64]);
        let n = self.x.rows();
        let mut counts = vec![0u32; n];
        if self.params.bootstrap {
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
        } else {
            counts.iter_mut().for_each(|c| *c = 1);
        }
        let rows: Vec<(usize, u32)> = (0..n).filter(|&i| counts[i] > 0).map(|i| (i, counts[i])).collect();
        let out_of_bag = (0..n).filter(|&i| counts[i] == 0).collect();
        let mut nodes = Vec::new();
        if rows.is_empty() {
            nodes.push(ForestNode::Leaf { positive_fraction: 0.5 });
        } else {
            self.grow(rows, 0, &mut nodes, &mut rng);
        }
        DecisionTree { nodes, out_of_bag }
    }
}

pub fn train_rf(x: &Matrix, y: &[u8], params: &ForestParams, seed: u64) -> Result<ForestModel, LearnError> {
    params.validate()?;
    check_training_data(x, y)?;
    let grower = Grower { x, y, params, k_features: params.features_per_split(x.cols()) };
    let trees = (0..params.n_trees).into_par_iter().map(|t| grower.tree(seed, t)).collect();
    Ok(ForestModel { n_features: x.cols(), trees })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_per_split() {
        let p = ForestParams::default();
        assert_eq!(p.features_per_split(768), 28);
        assert_eq!(p.features_per_split(1), 1);
        assert_eq!(ForestParams { feature_fraction: Some(1.0), ..p }.features_per_split(78), 78);
    }

    #[test]
    fn out_of_bag_recorded() {
        let x = Matrix::from_rows(&(0..30).map(|i| [i as f64]).collect::<Vec<_>>());
        let y: Vec<u8> = (0..30).map(|i| u8::from(i >= 15)).collect();
        let m = train_rf(&x, &y, &ForestParams { n_trees: 5, ..Default::default() }, 3).unwrap();
        assert!(m.trees.iter().all(|t| !t.out_of_bag.is_empty() && t.out_of_bag.len() < 30));
        let no_bag = train_rf(&x, &y, &ForestParams { n_trees: 2, bootstrap: false, ..Default::default() }, 3).unwrap();
        assert!(no_bag.trees.iter().all(|t| t.out_of_bag.is_empty()));
    }
}
