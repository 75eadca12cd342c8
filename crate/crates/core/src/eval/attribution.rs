//! Modality-level attribution by grouped permutation importance, plus exact
//! linear Shapley values for the logistic model.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::learn::{auc_roc, Matrix, TrainedModel};
use crate::seeds::{purpose, rng_for};
use crate::{GroupSpan, Modality};

pub const DEFAULT_PERMUTATIONS: usize = 20;
/// Baseline AUC must exceed `0.5 + DEGENERATE_MARGIN` for shares to be defined.
pub const DEGENERATE_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionMethod {
    /// `w_j (z_j - mean z_j)` summed per group; exact for the linear logit.
    LinearShapley,
    /// Mean absolute change of the score when the group is permuted.
    PermutationDelta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupAttribution {
    pub modality: Modality,
    pub mean_auc_drop: f64,
    pub share_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub baseline_auc: f64,
    pub groups: Vec<GroupAttribution>,
    /// `per_patient[row][group]`, groups in span order.
    pub per_patient: Vec<Vec<f64>>,
    pub contribution_method: ContributionMethod,
}

impl AttributionResult {
    pub fn share(&self, m: Modality) -> Option<f64> {
        self.groups.iter().find(|g| g.modality == m).map(|g| g.share_pct)
    }
}

/// Converts nonnegative drops into percentage shares summing to 100.
pub fn normalize_shares(drops: &[f64]) -> Option<Vec<f64>> {
    let clipped: Vec<f64> = drops.iter().map(|d| d.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    Some(clipped.iter().map(|d| 100.0 * d / total).collect())
}

fn check_spans(x: &Matrix, spans: &[GroupSpan]) -> Result<(), EvalError> {
    let mut next = 0;
    for s in spans {
        if s.start != next || s.end < s.start {
            return Err(EvalError::Spans("group spans must tile the columns in order".into()));
        }
        next = s.end;
    }
    if next != x.cols() {
        return Err(EvalError::Spans(format!("spans cover {next} of {} columns", x.cols())));
    }
    Ok(())
}

/// Copy of `x` with the rows of one column block permuted jointly.
fn permute_block(x: &Matrix, span: &GroupSpan, perm: &[usize]) -> Matrix {
    let mut out = x.clone();
    for (i, &src) in perm.iter().enumerate() {
        let values: Vec<f64> = x.row(src)[span.range()].to_vec();
        out.row_mut(i)[span.range()].copy_from_slice(&values);
    }
    out
}

/// Per-group AUC drops (one entry per permutation) and mean absolute score
/// changes per row. Streams are keyed by modality, not position.
pub(crate) fn permutation_drops(
    model: &TrainedModel,
    x: &Matrix,
    y: &[u8],
    spans: &[GroupSpan],
    seed: u64,
    n_permutations: usize,
) -> Result<(f64, Vec<Vec<f64>>, Vec<Vec<f64>>), EvalError> {
    check_spans(x, spans)?;
    let base_scores = model.predict_scores(x)?;
    let baseline = auc_roc(&base_scores, y)?;
    let mut drops = Vec::with_capacity(spans.len());
    let mut deltas = vec![vec![0.0; spans.len()]; x.rows()];
    for (g, span) in spans.iter().enumerate() {
        let mut rng = rng_for(seed, &[purpose::PERMUTATION, span.modality.index() as u64]);
        let mut group_drops = Vec::with_capacity(n_permutations);
        for _ in 0..n_permutations {
            let mut perm: Vec<usize> = (0..x.rows()).collect();
            perm.shuffle(&mut rng);
            let scores = model.predict_scores(&permute_block(x, span, &perm))?;
            group_drops.push(baseline - auc_roc(&scores, y)?);
            for (i, (s, b)) in scores.iter().zip(&base_scores).enumerate() {
                deltas[i][g] += (s - b).abs() / n_permutations as f64;
            }
        }
        drops.push(group_drops);
    }
    Ok((baseline, drops, deltas))
}

/// Linear Shapley contributions per group for each row of `x`.
pub fn linear_group_shapley(model: &TrainedModel, x: &Matrix, spans: &[GroupSpan]) -> Option<Vec<Vec<f64>>> {
    let TrainedModel::LogRegEN(m) = model else {
        return None;
    };
    Some(
        (0..x.rows())
            .map(|i| {
                let phi = m.shapley_row(x.row(i));
                spans.iter().map(|s| phi[s.range()].iter().sum()).collect()
            })
            .collect(),
    )
}

fn assemble(
    baseline: f64,
    spans: &[GroupSpan],
    mean_drops: Vec<f64>,
    per_patient: Vec<Vec<f64>>,
    method: ContributionMethod,
) -> Result<AttributionResult, EvalError> {
    if baseline <= 0.5 + DEGENERATE_MARGIN {
        return Err(EvalError::DegenerateModel(baseline));
    }
    let shares = normalize_shares(&mean_drops).ok_or(EvalError::DegenerateModel(baseline))?;
    let groups = spans
        .iter()
        .zip(mean_drops.iter().zip(shares))
        .map(|(s, (&d, share))| GroupAttribution { modality: s.modality, mean_auc_drop: d, share_pct: share })
        .collect();
    Ok(AttributionResult { baseline_auc: baseline, groups, per_patient, contribution_method: method })
}

pub fn attribute_modalities(
    model: &TrainedModel,
    x: &Matrix,
    y: &[u8],
    spans: &[GroupSpan],
    seed: u64,
    n_permutations: usize,
) -> Result<AttributionResult, EvalError> {
    let (baseline, drops, deltas) = permutation_drops(model, x, y, spans, seed, n_permutations.max(1))?;
    let mean_drops: Vec<f64> = drops.iter().map(|d| d.iter().sum::<f64>() / d.len() as f64).collect();
    let (per_patient, method) = match linear_group_shapley(model, x, spans) {
        Some(p) => (p, ContributionMethod::LinearShapley),
        None => (deltas, ContributionMethod::PermutationDelta),
    };
    assemble(baseline, spans, mean_drops, per_patient, method)
}

/// Pools held-out drops from several folds: the mean drop per group is taken
/// over all folds and permutations, baseline AUC is the fold average.
pub(crate) fn pool_fold_attributions(
    spans: &[GroupSpan],
    folds: Vec<(f64, Vec<Vec<f64>>)>,
    per_patient: Vec<Vec<f64>>,
    method: ContributionMethod,
) -> Result<AttributionResult, EvalError> {
    let baseline = folds.iter().map(|f| f.0).sum::<f64>() / folds.len() as f64;
    let mean_drops: Vec<f64> = (0..spans.len())
        .map(|g| {
            let all: Vec<f64> = folds.iter().flat_map(|f| f.1[g].iter().copied()).collect();
            all.iter().sum::<f64>() / all.len() as f64
        })
        .collect();
    assemble(baseline, spans, mean_drops, per_patient, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shares_clip_and_normalize() {
        let s = normalize_shares(&[0.1, -0.05, 0.3]).unwrap();
        assert_eq!(s[1], 0.0);
        assert!((s.iter().sum::<f64>() - 100.0).abs() < 1e-12);
        assert!(normalize_shares(&[0.0, -1.0]).is_none());
    }
}
