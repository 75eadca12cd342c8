//! Ranking metrics.

use super::LearnError;

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), LearnError> {
    if scores.len() != labels.len() {
        return Err(LearnError::DimensionMismatch { expected: labels.len(), found: scores.len() });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(LearnError::NonFinite("score"));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((pos, labels.len() - pos))
}

/// Indices sorted by descending score; equal scores keep input order.
fn descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties credited one half.
pub fn auc_roc(scores: &[f64], labels: &[u8]) -> Result<f64, LearnError> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(LearnError::SingleClass);
    }
    let order = descending(scores);
    // Walk tie groups from the top; each positive beats every negative below it.
    let mut negatives_above = 0usize;
    let mut twice_credit = 0u128;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0usize, 0usize);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] == 1 {
                gp += 1;
            } else {
                gn += 1;
            }
            j += 1;
        }
        let below = neg - negatives_above - gn;
        twice_credit += (2 * gp * below + gp * gn) as u128;
        negatives_above += gn;
        i = j;
    }
    Ok(twice_credit as f64 / (2.0 * pos as f64 * neg as f64))
}

/// Average precision, `sum_t (R_t - R_{t-1}) P_t` over distinct score
/// thresholds `t` in descending order. Tied scores form a single threshold,
/// so all-equal scores give the prevalence.
pub fn auc_prc(scores: &[f64], labels: &[u8]) -> Result<f64, LearnError> {
    let (pos, _) = check(scores, labels)?;
    if pos == 0 {
        return Err(LearnError::NoPositive);
    }
    let order = descending(scores);
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let mut gp = 0usize;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            gp += usize::from(labels[order[j]] == 1);
            j += 1;
        }
        tp += gp;
        seen += j - i;
        if gp > 0 {
            ap += (gp as f64 / pos as f64) * (tp as f64 / seen as f64);
        }
        i = j;
    }
    Ok(ap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_examples() {
        assert_eq!(auc_roc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(auc_roc(&[0.7, 0.6, 0.4, 0.3, 0.2], &[1, 0, 1, 0, 0]).unwrap(), 5.0 / 6.0);
        assert_eq!(auc_roc(&[0.5, 0.5], &[1, 0]).unwrap(), 0.5);
        assert_eq!(auc_prc(&[0.9, 0.8, 0.7], &[1, 0, 1]).unwrap(), (1.0 + 2.0 / 3.0) / 2.0);
        assert_eq!(auc_prc(&[0.3; 8], &[1, 0, 0, 1, 0, 0, 0, 0]).unwrap(), 0.25);
        assert_eq!(auc_prc(&[0.9, 0.8, 0.1], &[1, 1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        assert_eq!(auc_roc(&[0.1, 0.2], &[1, 1]), Err(LearnError::SingleClass));
        assert_eq!(auc_prc(&[0.1, 0.2], &[0, 0]), Err(LearnError::NoPositive));
        assert!(matches!(auc_roc(&[0.1], &[1, 0]), Err(LearnError::DimensionMismatch { .. })));
        assert!(matches!(auc_roc(&[f64::NAN, 0.2], &[1, 0]), Err(LearnError::NonFinite(_))));
    }
}
