//! Metrics, gradients and tree splits checked against brute-force oracles.

use gkc_core::learn::{
    auc_prc, auc_roc, train, train_gbt, GbtParams, Hyperparams, LogRegParams, LogisticObjective, Matrix, ModelKind,
    ModelSpec, TrainedModel, TreeNode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn auc_oracle(scores: &[f64], labels: &[u8]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                credit += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    credit / pairs
}

/// Precision and recall at every distinct threshold, highest first.
fn ap_oracle(scores: &[f64], labels: &[u8]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let p = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for t in thresholds {
        let selected: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = selected.iter().filter(|&&i| labels[i] == 1).count() as f64;
        let recall = tp / p;
        ap += (recall - prev_recall) * (tp / selected.len() as f64);
        prev_recall = recall;
    }
    ap
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<u8>) {
    let n = rng.random_range(2..=20);
    let coarse = rng.random_bool(0.5);
    loop {
        let scores: Vec<f64> =
            (0..n).map(|_| if coarse { rng.random_range(0..4) as f64 / 4.0 } else { rng.random::<f64>() }).collect();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.4))).collect();
        if labels.contains(&0) && labels.contains(&1) {
            return (scores, labels);
        }
    }
}

#[test]
fn auc_matches_pairwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let (s, y) = random_instance(&mut rng);
        assert!((auc_roc(&s, &y).unwrap() - auc_oracle(&s, &y)).abs() <= 1e-12, "{s:?} {y:?}");
    }
}

#[test]
fn average_precision_matches_threshold_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let (s, y) = random_instance(&mut rng);
        assert!((auc_prc(&s, &y).unwrap() - ap_oracle(&s, &y)).abs() <= 1e-12, "{s:?} {y:?}");
    }
}

#[test]
fn constant_scores_give_chance_and_prevalence() {
    let y = [1, 0, 0, 1, 0];
    assert_eq!(auc_roc(&[0.3; 5], &y).unwrap(), 0.5);
    assert!((auc_prc(&[0.3; 5], &y).unwrap() - 0.4).abs() < 1e-15);
}

#[test]
fn metric_errors() {
    assert!(auc_roc(&[0.1, 0.2], &[1, 1]).is_err());
    assert!(auc_prc(&[0.1, 0.2], &[0, 0]).is_err());
    assert!(auc_roc(&[f64::NAN, 0.2], &[0, 1]).is_err());
    assert!(auc_roc(&[0.1], &[0, 1]).is_err());
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n, d) = (30, 6);
    let z = Matrix::new(n, d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect());
    let y: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
    let obj = LogisticObjective { z: &z, y: &y, lambda: 0.3, alpha: 0.4 };
    for _ in 0..50 {
        // Keep weights away from 0 where the L1 term has a kink.
        let w: Vec<f64> =
            (0..d).map(|_| rng.random_range(0.05..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let b = rng.random_range(-1.0..1.0);
        let (gw, gb) = obj.gradient(&w, b);
        let h = 1e-6;
        for j in 0..=d {
            let (mut plus, mut minus) = (w.clone(), w.clone());
            let (mut bp, mut bm) = (b, b);
            if j < d {
                plus[j] += h;
                minus[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let fd = (obj.value(&plus, bp) - obj.value(&minus, bm)) / (2.0 * h);
            let analytic = if j < d { gw[j] } else { gb };
            let rel = (fd - analytic).abs() / analytic.abs().max(1e-3);
            assert!(rel < 1e-6, "coordinate {j}: fd {fd} vs analytic {analytic}");
        }
    }
}

/// Best single split on one feature by exhaustive search.
fn stump_oracle(x: &[f64], y: &[u8], l2: f64) -> (f64, f64, f64) {
    let p = y.iter().map(|&v| f64::from(v)).sum::<f64>() / y.len() as f64;
    let g: Vec<f64> = y.iter().map(|&v| p - f64::from(v)).collect();
    let h = p * (1.0 - p);
    let mut values: Vec<f64> = x.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let score = |gs: f64, hs: f64| gs * gs / (hs + l2);
    let (gt, ht) = (g.iter().sum::<f64>(), h * y.len() as f64);
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for w in values.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        let left: Vec<usize> = (0..x.len()).filter(|&i| x[i] < t).collect();
        let gl: f64 = left.iter().map(|&i| g[i]).sum();
        let hl = h * left.len() as f64;
        let gain = score(gl, hl) + score(gt - gl, ht - hl);
        if gain > best.0 {
            best = (gain, -gl / (hl + l2), -(gt - gl) / (ht - hl + l2));
        }
    }
    (best.0, best.1, best.2)
}

#[test]
fn first_tree_stump_matches_exhaustive_split() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let n = rng.random_range(6..25);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..10) as f64).collect();
        let y: Vec<u8> = (0..n).map(|i| u8::from(x[i] + rng.random_range(-3.0..3.0) > 4.5)).collect();
        if !y.contains(&0) || !y.contains(&1) {
            continue;
        }
        let params =
            GbtParams { n_rounds: 1, learning_rate: 1.0, max_depth: 1, l2_leaf_reg: 0.7, min_child_weight: 0.0 };
        let model = train_gbt(&Matrix::new(n, 1, x.clone()), &y, &params).unwrap();
        let (_, wl, wr) = stump_oracle(&x, &y, 0.7);
        let tree = &model.trees[0];
        let TreeNode::Split { left, right, .. } = tree.nodes[0] else {
            continue;
        };
        let weight = |k: usize| match tree.nodes[k] {
            TreeNode::Leaf { weight } => weight,
            _ => panic!("depth-1 child is a leaf"),
        };
        assert!((weight(left) - wl).abs() < 1e-12 && (weight(right) - wr).abs() < 1e-12);
    }
}

#[test]
fn models_round_trip_through_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Matrix::new(40, 3, (0..120).map(|_| rng.random::<f64>()).collect());
    let y: Vec<u8> = (0..40).map(|i| u8::from(x.get(i, 0) > 0.5)).collect();
    for kind in ModelKind::ALL {
        let hp = match kind {
            ModelKind::LogRegEN => Hyperparams::LogRegEN(LogRegParams::default()),
            _ => Hyperparams::default_for(kind),
        };
        let model = train(&x, &y, &ModelSpec::new(hp, 9)).unwrap();
        let back = TrainedModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back.predict_scores(&x).unwrap(), model.predict_scores(&x).unwrap());
    }
    assert!(TrainedModel::from_json(r#"{"format":"other","version":1,"model":{}}"#).is_err());
}
