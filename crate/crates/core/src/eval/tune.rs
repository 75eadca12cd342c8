//! Hyperparameter grids and inner cross-validated tuning.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::cv::{check_class_counts, stratified_assignment};
use super::EvalError;
use crate::features::{note, AccessLog, Phase};
use crate::learn::{
    auc_roc, sigmoid, train, train_gbt, ForestParams, GbtParams, Hyperparams, LogRegParams, Matrix, ModelKind,
    ModelSpec,
};
use crate::seeds::{derive_seed, purpose};

pub const INNER_FOLDS: usize = 3;
/// Bumped whenever a default grid changes.
pub const GRID_VERSION: &str = "grids-v1";

/// Default grid of a model kind, in tie-breaking order.
pub fn default_grid(kind: ModelKind) -> Vec<Hyperparams> {
    match kind {
        ModelKind::LogRegEN => {
            let mut g = Vec::new();
            for lambda in [1e-3, 1e-2, 1e-1, 1.0] {
                for alpha in [0.2, 0.5, 0.8] {
                    g.push(Hyperparams::LogRegEN(LogRegParams { lambda, alpha, ..LogRegParams::default() }));
                }
            }
            g
        }
        ModelKind::GradBoost => {
            let mut g = Vec::new();
            for n_rounds in [50, 200] {
                for max_depth in [2, 3] {
                    for learning_rate in [0.05, 0.1] {
                        g.push(Hyperparams::GradBoost(GbtParams {
                            n_rounds,
                            max_depth,
                            learning_rate,
                            ..GbtParams::default()
                        }));
                    }
                }
            }
            g
        }
        ModelKind::RandomForest => [4, 8]
            .into_iter()
            .map(|max_depth| {
                Hyperparams::RandomForest(ForestParams { n_trees: 200, max_depth, ..ForestParams::default() })
            })
            .collect(),
    }
}

fn prefix_auc(raw: &[f64], y: &[u8]) -> f64 {
    let probs: Vec<f64> = raw.iter().map(|&r| sigmoid(r)).collect();
    auc_roc(&probs, y).unwrap_or(f64::NEG_INFINITY)
}

/// Inner-fold AUC of every grid point, in grid order. Failed points score `-inf`.
pub fn inner_scores(
    x: &Matrix,
    y: &[u8],
    rows: &[usize],
    grid: &[Hyperparams],
    n_inner: usize,
    seed: u64,
    log: Option<&AccessLog>,
) -> Result<Vec<f64>, EvalError> {
    let labels: Vec<u8> = rows.iter().map(|&i| y[i]).collect();
    check_class_counts(&labels, n_inner)?;
    note(log, Phase::InnerTune, rows);
    let assign = stratified_assignment(&labels, n_inner, seed, &[purpose::INNER_CV]);
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..n_inner)
        .map(|f| {
            let (tr, te): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&k| assign[k] != f);
            (tr.into_iter().map(|k| rows[k]).collect(), te.into_iter().map(|k| rows[k]).collect())
        })
        .collect();
    let model_seed = derive_seed(seed, &[purpose::MODEL]);

    // Boosting is sequential, so grid points that differ only in the number
    // of rounds share one fit evaluated at each prefix.
    let mut scores = vec![f64::NEG_INFINITY; grid.len()];
    let mut gbt_groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut others = Vec::new();
    for (g, hp) in grid.iter().enumerate() {
        match hp {
            Hyperparams::GradBoost(p) => {
                let key = format!("{:?}|{}|{:?}|{:?}", p.learning_rate, p.max_depth, p.l2_leaf_reg, p.min_child_weight);
                gbt_groups.entry(key).or_default().push(g);
            }
            _ => others.push(g),
        }
    }

    let per_fold: Vec<Vec<(usize, f64)>> = splits
        .par_iter()
        .map(|(tr, te)| {
            let xtr = x.select_rows(tr);
            let ytr: Vec<u8> = tr.iter().map(|&i| y[i]).collect();
            let xte = x.select_rows(te);
            let yte: Vec<u8> = te.iter().map(|&i| y[i]).collect();
            let mut out = Vec::new();
            for &g in &others {
                let spec = ModelSpec::new(grid[g].clone(), model_seed);
                let auc = train(&xtr, &ytr, &spec)
                    .and_then(|m| m.predict_scores(&xte))
                    .and_then(|s| auc_roc(&s, &yte))
                    .unwrap_or(f64::NEG_INFINITY);
                out.push((g, auc));
            }
            for members in gbt_groups.values() {
                let params: Vec<&GbtParams> = members
                    .iter()
                    .map(|&g| match &grid[g] {
                        Hyperparams::GradBoost(p) => p,
                        _ => unreachable!("grouped points are GradBoost"),
                    })
                    .collect();
                let max_rounds = params.iter().map(|p| p.n_rounds).max().unwrap_or(0);
                let full = GbtParams { n_rounds: max_rounds, ..params[0].clone() };
                let Ok(model) = full.validate().and_then(|_| train_gbt(&xtr, &ytr, &full)) else {
                    out.extend(members.iter().map(|&g| (g, f64::NEG_INFINITY)));
                    continue;
                };
                let mut raw: Vec<f64> = vec![model.base_score; xte.rows()];
                let mut by_rounds: BTreeMap<usize, f64> = BTreeMap::new();
                let wanted: Vec<usize> = params.iter().map(|p| p.n_rounds).collect();
                if wanted.contains(&0) {
                    by_rounds.insert(0, prefix_auc(&raw, &yte));
                }
                for (t, tree) in model.trees.iter().enumerate() {
                    for (i, r) in raw.iter_mut().enumerate() {
                        *r += model.learning_rate * tree.leaf_value(xte.row(i));
                    }
                    if wanted.contains(&(t + 1)) {
                        by_rounds.insert(t + 1, prefix_auc(&raw, &yte));
                    }
                }
                for (&g, p) in members.iter().zip(&params) {
                    out.push((g, by_rounds.get(&p.n_rounds).copied().unwrap_or(f64::NEG_INFINITY)));
                }
            }
            out
        })
        .collect();

    for g in 0..grid.len() {
        let vals: Vec<f64> = per_fold.iter().filter_map(|f| f.iter().find(|(i, _)| *i == g).map(|(_, v)| *v)).collect();
        if vals.len() == n_inner && vals.iter().all(|v| v.is_finite()) {
            scores[g] = vals.iter().sum::<f64>() / n_inner as f64;
        }
    }
    Ok(scores)
}

/// Grid point with the highest mean inner AUC; ties go to the earlier point.
/// A single-point grid is returned without fitting.
pub fn inner_tune(
    x: &Matrix,
    y: &[u8],
    rows: &[usize],
    grid: &[Hyperparams],
    n_inner: usize,
    seed: u64,
    log: Option<&AccessLog>,
) -> Result<Hyperparams, EvalError> {
    match grid {
        [] => Err(EvalError::EmptyGrid),
        [only] => Ok(only.clone()),
        _ => {
            let scores = inner_scores(x, y, rows, grid, n_inner, seed, log)?;
            let mut best = 0;
            for g in 1..grid.len() {
                if scores[g] > scores[best] {
                    best = g;
                }
            }
            if scores[best] == f64::NEG_INFINITY {
                return Err(EvalError::AllGridPointsFailed);
            }
            Ok(grid[best].clone())
        }
    }
}
