//! Bootstrap intervals and the Wilcoxon signed-rank test.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;
use crate::seeds::{purpose, rng_for};

/// Largest number of nonzero differences handled by the exact null distribution.
pub const EXACT_MAX_N: usize = 25;
pub const MIN_PAIRS: usize = 5;

/// Mean written as `v0 + mean(v - v0)` so constant inputs return exactly `v0`.
pub(crate) fn stable_mean(values: &[f64]) -> f64 {
    let v0 = values[0];
    v0 + values.iter().map(|v| v - v0).sum::<f64>() / values.len() as f64
}

/// Type-7 (linear interpolation) quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = stable_mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Percentile interval of the mean over `b` seeded resamples.
pub fn bootstrap_ci(values: &[f64], b: usize, level: f64, seed: u64) -> (f64, f64) {
    assert!(!values.is_empty(), "bootstrap of an empty sample");
    assert!(level > 0.0 && level < 1.0, "confidence level in (0, 1)");
    let mut rng = rng_for(seed, &[purpose::BOOTSTRAP]);
    let n = values.len();
    let mut means: Vec<f64> = (0..b.max(1))
        .map(|_| {
            let v0 = values[rng.random_range(0..n)];
            let mut acc = 0.0;
            for _ in 1..n {
                acc += values[rng.random_range(0..n)] - v0;
            }
            v0 + acc / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    (quantile_sorted(&means, alpha), quantile_sorted(&means, 1.0 - alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
    AllZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub method: WilcoxonMethod,
}

/// Average ranks (1-based) of `values`, which must be sorted ascending,
/// doubled so they stay integral.
fn doubled_ranks(sorted: &[f64]) -> Vec<u64> {
    let mut ranks = vec![0; sorted.len()];
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        // ranks i+1..=j+1 average to (i+j+2)/2
        for r in &mut ranks[i..=j] {
            *r = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

/// Number of sign assignments whose doubled positive rank sum is `<= t`.
fn exact_lower_count(ranks: &[u64], t: u64) -> (u128, u128) {
    let total_sum: u64 = ranks.iter().sum();
    let mut counts = vec![0u128; total_sum as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let below: u128 = counts[..=(t as usize).min(reach)].iter().sum();
    (below, 1u128 << ranks.len())
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Unpaired(format!("{} vs {} values", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let mut diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Ok(WilcoxonResult {
            w: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            p_value: 1.0,
            n_effective: 0,
            method: WilcoxonMethod::AllZero,
        });
    }
    let n = diffs.len();
    if n < MIN_PAIRS {
        return Err(EvalError::TooFewPairs(n));
    }
    diffs.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let plus2: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total2: u64 = ranks.iter().sum();
    let minus2 = total2 - plus2;
    let w2 = plus2.min(minus2);
    let (w_plus, w_minus, w) = (plus2 as f64 / 2.0, minus2 as f64 / 2.0, w2 as f64 / 2.0);

    let (p_value, method) = if n <= EXACT_MAX_N {
        let (below, total) = exact_lower_count(&ranks, w2);
        (((2 * below) as f64 / total as f64).min(1.0), WilcoxonMethod::Exact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < abs.len() {
            let j = abs[i..].iter().take_while(|v| **v == abs[i]).count();
            let t = j as f64;
            tie_term += t * t * t - t;
            i += j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        let p = if var <= 0.0 {
            1.0
        } else {
            let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            (2.0 * (1.0 - normal.cdf(z))).min(1.0)
        };
        (p, WilcoxonMethod::NormalApprox)
    };
    Ok(WilcoxonResult { w, w_plus, w_minus, p_value, n_effective: n, method })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_positive_differences() {
        let r = wilcoxon_signed_rank(&[2.0, 3.0, 4.0, 5.0, 6.0], &[1.0; 5]).unwrap();
        assert_eq!(r.p_value, 0.0625);
        assert_eq!(r.method, WilcoxonMethod::Exact);
    }

    #[test]
    fn identical_samples_give_one() {
        let r = wilcoxon_signed_rank(&[0.3; 8], &[0.3; 8]).unwrap();
        assert_eq!((r.p_value, r.n_effective), (1.0, 0));
    }

    #[test]
    fn too_few_pairs() {
        assert!(matches!(wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0; 3]), Err(EvalError::TooFewPairs(3))));
    }

    #[test]
    fn approximation_above_exact_limit() {
        let a: Vec<f64> = (0..26).map(|i| i as f64 * 0.1 + 1.0).collect();
        let r = wilcoxon_signed_rank(&a, &[0.0; 26]).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApprox);
        assert!(r.p_value < 1e-4);
    }

    #[test]
    fn doubled_ranks_average_ties() {
        assert_eq!(doubled_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![2, 5, 5, 8]);
    }

    #[test]
    fn bootstrap_constant_and_translation() {
        assert_eq!(bootstrap_ci(&[0.8; 50], 1000, 0.95, 3), (0.8, 0.8));
        let v: Vec<f64> = (0..50).map(|i| (i % 7) as f64 / 10.0).collect();
        let shifted: Vec<f64> = v.iter().map(|x| x + 2.0).collect();
        let (a, b) = bootstrap_ci(&v, 500, 0.95, 9);
        let (c, d) = bootstrap_ci(&shifted, 500, 0.95, 9);
        assert!((c - a - 2.0).abs() < 1e-12 && (d - b - 2.0).abs() < 1e-12);
    }
}
