//! Repeated stratified fold assignment.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::seeds::{purpose, rng_for};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub n_folds: usize,
    pub n_repeats: usize,
    pub seed: u64,
    /// `assignments[repeat][row]` is the fold of `row` in that repeat.
    pub assignments: Vec<Vec<usize>>,
}

/// Fold id per row: each class is shuffled with `rng_path` and the
/// positives-then-negatives sequence is dealt round-robin.
pub(crate) fn stratified_assignment(labels: &[u8], n_folds: usize, seed: u64, rng_path: &[u64]) -> Vec<usize> {
    let mut rng = rng_for(seed, rng_path);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold = vec![0; labels.len()];
    for (k, &row) in pos.iter().chain(neg.iter()).enumerate() {
        fold[row] = k % n_folds;
    }
    fold
}

pub(crate) fn check_class_counts(labels: &[u8], n_folds: usize) -> Result<(), EvalError> {
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if n_folds < 2 || pos < n_folds || neg < n_folds {
        return Err(EvalError::TooFewPerClass { positives: pos, negatives: neg, folds: n_folds });
    }
    Ok(())
}

pub fn make_cv_plan(labels: &[u8], n_folds: usize, n_repeats: usize, seed: u64) -> Result<CvPlan, EvalError> {
    check_class_counts(labels, n_folds)?;
    let assignments =
        (0..n_repeats).map(|r| stratified_assignment(labels, n_folds, seed, &[purpose::CV_PLAN, r as u64])).collect();
    Ok(CvPlan { n_folds, n_repeats, seed, assignments })
}

impl CvPlan {
    pub fn n_rows(&self) -> usize {
        self.assignments.first().map_or(0, Vec::len)
    }

    /// `(train, test)` row indices, ascending.
    pub fn split(&self, repeat: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let a = &self.assignments[repeat];
        (0..a.len()).partition(|&i| a[i] != fold)
    }

    /// All `(repeat, fold)` pairs in order.
    pub fn folds(&self) -> Vec<(usize, usize)> {
        (0..self.n_repeats).flat_map(|r| (0..self.n_folds).map(move |f| (r, f))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_rows() {
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 0)).collect();
        let plan = make_cv_plan(&labels, 5, 2, 1).unwrap();
        for r in 0..2 {
            let mut seen = vec![0; 40];
            for f in 0..5 {
                for i in plan.split(r, f).1 {
                    seen[i] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn too_few_positives_rejected() {
        assert!(matches!(make_cv_plan(&[1, 1, 0, 0, 0, 0], 3, 1, 0), Err(EvalError::TooFewPerClass { .. })));
    }
}
