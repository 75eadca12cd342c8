//! Wilcoxon exactness, stratified folds and bootstrap behavior.

use gkc_core::eval::{
    bootstrap_ci, compare_records, make_cv_plan, wilcoxon_signed_rank, EvalError, Metric, MetricsRecord, WilcoxonMethod,
};
use gkc_core::features::Strategy;
use gkc_core::learn::{Hyperparams, ModelKind};
use gkc_core::ModalitySubset;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-sided p from all 2^n sign assignments over midranks of |d|.
fn enumeration_p(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    let mut doubled = vec![0u64; n];
    for i in 0..n {
        let less = d.iter().filter(|v| v.abs() < d[i].abs()).count() as u64;
        let equal = d.iter().filter(|v| v.abs() == d[i].abs()).count() as u64;
        doubled[i] = 2 * less + equal + 1;
    }
    let total: u64 = doubled.iter().sum();
    let plus: u64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| doubled[i]).sum();
    let w = plus.min(total - plus);
    let mut at_or_below = 0u64;
    for mask in 0u32..(1 << n) {
        let s: u64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| doubled[i]).sum();
        if s <= w {
            at_or_below += 1;
        }
    }
    (2.0 * at_or_below as f64 / (1u64 << n) as f64).min(1.0)
}

#[test]
fn exact_p_equals_full_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 500 {
        let n = rng.random_range(5..=12);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64 * 0.05).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64 * 0.05).collect();
        let nonzero = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        if nonzero < 5 {
            continue;
        }
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!(r.p_value, enumeration_p(&a, &b), "{a:?} {b:?}");
        checked += 1;
    }
}

#[test]
fn documented_small_case_is_bitwise() {
    let r = wilcoxon_signed_rank(&[0.9, 0.8, 0.7, 0.6, 0.5], &[0.4, 0.3, 0.2, 0.1, 0.0]).unwrap();
    assert_eq!(r.p_value.to_bits(), 0.0625f64.to_bits());
}

#[test]
fn swapping_samples_keeps_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [6, 20, 40] {
        let a: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let (x, y) = (wilcoxon_signed_rank(&a, &b).unwrap(), wilcoxon_signed_rank(&b, &a).unwrap());
        assert_eq!(x.p_value, y.p_value);
        assert_eq!((x.w_plus, x.w_minus), (y.w_minus, y.w_plus));
    }
}

#[test]
fn large_samples_use_normal_approximation() {
    let a: Vec<f64> = (0..50).map(|i| 0.6 + 0.001 * i as f64).collect();
    let b: Vec<f64> = (0..50).map(|i| 0.5 + 0.0013 * i as f64).collect();
    let r = wilcoxon_signed_rank(&a, &b).unwrap();
    assert_eq!(r.method, WilcoxonMethod::NormalApprox);
    assert!(r.p_value < 1e-6);
}

#[test]
fn too_few_pairs_rejected() {
    assert!(matches!(wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0; 3]), Err(EvalError::TooFewPairs(3))));
}

fn labels(n: usize, pos: usize, seed: u64) -> Vec<u8> {
    let mut y: Vec<u8> = (0..n).map(|i| u8::from(i < pos)).collect();
    y.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    y
}

#[test]
fn folds_are_stratified_for_any_seed() {
    for seed in 0..40 {
        let y = labels(184, 67, seed);
        let plan = make_cv_plan(&y, 5, 10, seed * 7919).unwrap();
        for (r, f) in plan.folds() {
            let (train, test) = plan.split(r, f);
            let pos = test.iter().filter(|&&i| y[i] == 1).count();
            assert!(pos == 13 || pos == 14, "seed {seed} fold {r}/{f}: {pos} positives");
            assert!(test.len() == 36 || test.len() == 37);
            assert_eq!(train.len() + test.len(), 184);
            assert!(train.iter().all(|i| !test.contains(i)));
        }
        for r in 0..10 {
            let mut covered: Vec<usize> = (0..5).flat_map(|f| plan.split(r, f).1).collect();
            covered.sort_unstable();
            assert_eq!(covered, (0..184).collect::<Vec<_>>());
        }
    }
}

#[test]
fn plan_depends_only_on_seed() {
    let y = labels(60, 20, 1);
    let a = make_cv_plan(&y, 5, 3, 9).unwrap();
    let b = make_cv_plan(&y, 5, 3, 9).unwrap();
    let c = make_cv_plan(&y, 5, 3, 10).unwrap();
    assert_eq!(a.split(2, 4), b.split(2, 4));
    assert!((0..3).any(|r| a.split(r, 0) != c.split(r, 0)));
}

#[test]
fn too_few_per_class_rejected() {
    assert!(make_cv_plan(&labels(30, 3, 0), 5, 1, 0).is_err());
}

#[test]
fn bootstrap_interval_brackets_mean_and_is_seeded() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let v: Vec<f64> = (0..50).map(|_| rng.random_range(0.6..0.9)).collect();
    let mean = v.iter().sum::<f64>() / 50.0;
    let (lo, hi) = bootstrap_ci(&v, 1000, 0.95, 5);
    assert!(lo < mean && mean < hi);
    assert_eq!((lo, hi), bootstrap_ci(&v, 1000, 0.95, 5));
    let (lo2, hi2) = bootstrap_ci(&v, 1000, 0.5, 5);
    assert!(lo2 >= lo && hi2 <= hi);
}

fn record(strategy: Strategy, repeat: usize, fold: usize, auc: f64) -> MetricsRecord {
    MetricsRecord {
        repeat,
        fold,
        strategy,
        subset: ModalitySubset::FULL,
        model: ModelKind::GradBoost,
        hyperparams: Hyperparams::default_for(ModelKind::GradBoost),
        auc_roc: auc,
        auc_prc: auc,
    }
}

#[test]
fn comparison_pairs_by_fold_key_not_order() {
    let a: Vec<_> = (0..10).map(|k| record(Strategy::GKC, k / 5, k % 5, 0.8 + 0.01 * k as f64)).collect();
    let mut b: Vec<_> = (0..10).map(|k| record(Strategy::ENF, k / 5, k % 5, 0.7 + 0.005 * k as f64)).collect();
    let ordered = compare_records(&a, &b, Metric::AucRoc).unwrap();
    b.reverse();
    let shuffled = compare_records(&a, &b, Metric::AucRoc).unwrap();
    assert_eq!(ordered.test, shuffled.test);
    b.pop();
    assert!(matches!(compare_records(&a, &b, Metric::AucRoc), Err(EvalError::Unpaired(_))));
}
