//! Elastic-net logistic regression by proximal gradient descent.
//!
//! Minimizes over standardized columns `z`
//!
//! ```text
//! F(w, b) = mean_i [softplus(b + w.z_i) - y_i (b + w.z_i)]
//!         + lambda (alpha ||w||_1 + (1 - alpha) / 2 ||w||_2^2)
//! ```
//!
//! with the intercept unpenalized. Each step is a gradient step on the smooth
//! part followed by soft-thresholding; the step size is halved until the
//! quadratic upper bound holds.

use serde::{Deserialize, Serialize};

use super::{check_training_data, sigmoid, LearnError, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub lambda: f64,
    pub alpha: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        Self { lambda: 0.01, alpha: 0.5, max_iter: 1000, tol: 1e-6 }
    }
}

impl LogRegParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidHyperparameter(m.to_string()));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be > 0");
        }
        Ok(())
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Column means and inverse sample standard deviations; constant columns get
/// scale 0 so they standardize to 0.
pub fn standardization(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let mut means = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for (m, v) in means.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut ss = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        for ((s, v), m) in ss.iter_mut().zip(x.row(i)).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let scales = ss
        .iter()
        .map(|s| {
            let sd = if x.rows() > 1 { (s / (n - 1.0)).sqrt() } else { 0.0 };
            if sd > 1e-12 {
                1.0 / sd
            } else {
                0.0
            }
        })
        .collect();
    (means, scales)
}

fn apply_standardization(x: &Matrix, means: &[f64], scales: &[f64]) -> Matrix {
    let mut z = x.clone();
    for i in 0..z.rows() {
        for ((v, m), s) in z.row_mut(i).iter_mut().zip(means).zip(scales) {
            *v = (*v - m) * s;
        }
    }
    z
}

/// The training objective on an already standardized design.
pub struct LogisticObjective<'a> {
    pub z: &'a Matrix,
    pub y: &'a [u8],
    pub lambda: f64,
    pub alpha: f64,
}

impl LogisticObjective<'_> {
    fn linear(&self, w: &[f64], b: f64) -> Vec<f64> {
        (0..self.z.rows()).map(|i| b + self.z.row(i).iter().zip(w).map(|(a, c)| a * c).sum::<f64>()).collect()
    }

    /// Mean logistic loss plus the ridge part of the penalty.
    pub fn smooth_value(&self, w: &[f64], b: f64) -> f64 {
        let eta = self.linear(w, b);
        let loss: f64 =
            eta.iter().zip(self.y).map(|(e, &y)| softplus(*e) - f64::from(y) * e).sum::<f64>() / self.z.rows() as f64;
        loss + 0.5 * self.lambda * (1.0 - self.alpha) * w.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn value(&self, w: &[f64], b: f64) -> f64 {
        self.smooth_value(w, b) + self.lambda * self.alpha * w.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Gradient of the smooth part, `(d/dw, d/db)`.
    pub fn smooth_gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let eta = self.linear(w, b);
        let n = self.z.rows() as f64;
        let mut gw = vec![0.0; w.len()];
        let mut gb = 0.0;
        for (i, (e, &y)) in eta.iter().zip(self.y).enumerate() {
            let r = sigmoid(*e) - f64::from(y);
            gb += r;
            for (g, zij) in gw.iter_mut().zip(self.z.row(i)) {
                *g += r * zij;
            }
        }
        let ridge = self.lambda * (1.0 - self.alpha);
        for (g, wj) in gw.iter_mut().zip(w) {
            *g = *g / n + ridge * wj;
        }
        (gw, gb / n)
    }

    /// Gradient of the full objective, valid where no weight is exactly 0.
    pub fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let (mut gw, gb) = self.smooth_gradient(w, b);
        let l1 = self.lambda * self.alpha;
        for (g, wj) in gw.iter_mut().zip(w) {
            *g += l1 * wj.signum();
        }
        (gw, gb)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Weights on standardized columns.
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Training means of the standardized columns (zero up to rounding).
    pub train_mean_z: Vec<f64>,
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
}

impl LogisticModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn logit_row(&self, row: &[f64]) -> f64 {
        let mut eta = self.intercept;
        for j in 0..row.len() {
            eta += self.weights[j] * (row[j] - self.means[j]) * self.scales[j];
        }
        eta
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.logit_row(row))
    }

    /// Logit of the average training row in standardized space.
    pub fn mean_training_logit(&self) -> f64 {
        self.intercept + self.weights.iter().zip(&self.train_mean_z).map(|(w, m)| w * m).sum::<f64>()
    }

    /// Exact linear Shapley values per column: `w_j (z_j - mean z_j)`.
    pub fn shapley_row(&self, row: &[f64]) -> Vec<f64> {
        (0..row.len())
            .map(|j| self.weights[j] * ((row[j] - self.means[j]) * self.scales[j] - self.train_mean_z[j]))
            .collect()
    }

    /// Weights expressed on the original column scale.
    pub fn raw_weights(&self) -> Vec<f64> {
        self.weights.iter().zip(&self.scales).map(|(w, s)| w * s).collect()
    }
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn train_logreg_en(x: &Matrix, y: &[u8], params: &LogRegParams) -> Result<LogisticModel, LearnError> {
    train_logreg_en_traced(x, y, params).map(|(m, _)| m)
}

/// Also returns the objective value after every accepted step.
pub fn train_logreg_en_traced(
    x: &Matrix,
    y: &[u8],
    params: &LogRegParams,
) -> Result<(LogisticModel, Vec<f64>), LearnError> {
    params.validate()?;
    let pos = check_training_data(x, y)?;
    let (means, scales) = standardization(x);
    let z = apply_standardization(x, &means, &scales);
    let obj = LogisticObjective { z: &z, y, lambda: params.lambda, alpha: params.alpha };
    let l1 = params.lambda * params.alpha;

    let d = x.cols();
    let prevalence = pos as f64 / y.len() as f64;
    let mut w = vec![0.0; d];
    let mut b = (prevalence / (1.0 - prevalence)).ln();
    let mut f = obj.smooth_value(&w, b);
    let mut trace = vec![f];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;
        let (gw, gb) = obj.smooth_gradient(&w, b);
        loop {
            let cand_w: Vec<f64> = w.iter().zip(&gw).map(|(wj, g)| soft_threshold(wj - step * g, step * l1)).collect();
            let cand_b = b - step * gb;
            let mut lin = (cand_b - b) * gb;
            let mut sq = (cand_b - b) * (cand_b - b);
            for j in 0..d {
                let delta = cand_w[j] - w[j];
                lin += delta * gw[j];
                sq += delta * delta;
            }
            let cand_f = obj.smooth_value(&cand_w, cand_b);
            if !cand_f.is_finite() {
                return Err(LearnError::NonFinite("objective"));
            }
            if cand_f <= f + lin + sq / (2.0 * step) + 1e-15 * f.abs() {
                let grad_map = sq.sqrt() / step;
                w = cand_w;
                b = cand_b;
                f = cand_f;
                trace.push(f + l1 * w.iter().map(|v| v.abs()).sum::<f64>());
                if grad_map < params.tol {
                    converged = true;
                }
                step *= 1.25;
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                return Err(LearnError::NonFinite("step size"));
            }
        }
        if converged {
            break;
        }
    }

    let n = z.rows() as f64;
    let train_mean_z = (0..d).map(|j| (0..z.rows()).map(|i| z.get(i, j)).sum::<f64>() / n).collect();
    let objective = *trace.last().expect("trace nonempty");
    let model =
        LogisticModel { means, scales, weights: w, intercept: b, train_mean_z, iterations, objective, converged };
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn huge_lambda_gives_intercept_only() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.5], [2.0, 0.2], [3.0, 0.9]]);
        let y = [0, 0, 1, 1];
        let m = train_logreg_en(&x, &y, &LogRegParams { lambda: 1e3, alpha: 1.0, ..Default::default() }).unwrap();
        assert!(m.weights.iter().all(|w| *w == 0.0));
        assert!((m.predict_row(&[5.0, 5.0]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn constant_column_ignored() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]);
        let m = train_logreg_en(&x, &[0, 0, 1, 1], &LogRegParams::default()).unwrap();
        assert_eq!(m.scales[0], 0.0);
        assert!(m.weights[1] > 0.0);
    }
}
