//! From-scratch binary classifiers and ranking metrics.
//!
//! Models are trained on a dense row-major [`Matrix`] and 0/1 labels, and
//! score rows with the probability of label 1.
//!
//! Serialized models are JSON documents with a self-describing header:
//!
//! ```text
//! {"format": "gkc-model", "version": 1, "model": {"kind": "GradBoost", ...}}
//! ```

mod forest;
mod gbt;
mod logreg;
mod metrics;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{train_rf, DecisionTree, ForestModel, ForestNode, ForestParams};
pub use gbt::{train_gbt, GbtModel, GbtParams, RegressionTree, TreeNode};
pub use logreg::{
    standardization, train_logreg_en, train_logreg_en_traced, LogRegParams, LogisticModel, LogisticObjective,
};
pub use metrics::{auc_prc, auc_roc};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("no positive labels")]
    NoPositive,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("model format: {0}")]
    Format(String),
}

/// Dense row-major matrix.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    /// Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Columns from the given half-open ranges, concatenated in order.
    pub fn select_col_ranges(&self, ranges: &[std::ops::Range<usize>]) -> Matrix {
        let cols: usize = ranges.iter().map(|r| r.len()).sum();
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            let row = self.row(i);
            for r in ranges {
                data.extend_from_slice(&row[r.clone()]);
            }
        }
        Matrix { rows: self.rows, cols, data }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    LogRegEN,
    RandomForest,
    GradBoost,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::LogRegEN, ModelKind::RandomForest, ModelKind::GradBoost];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "logregen" | "logreg" | "logistic" => Ok(Self::LogRegEN),
            "randomforest" | "rf" | "forest" => Ok(Self::RandomForest),
            "gradboost" | "gbt" | "gbdt" => Ok(Self::GradBoost),
            _ => Err(format!("unknown model kind `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Hyperparams {
    LogRegEN(LogRegParams),
    RandomForest(ForestParams),
    GradBoost(GbtParams),
}

impl Hyperparams {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::LogRegEN(_) => ModelKind::LogRegEN,
            Self::RandomForest(_) => ModelKind::RandomForest,
            Self::GradBoost(_) => ModelKind::GradBoost,
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::LogRegEN => Self::LogRegEN(LogRegParams::default()),
            ModelKind::RandomForest => Self::RandomForest(ForestParams::default()),
            ModelKind::GradBoost => Self::GradBoost(GbtParams::default()),
        }
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        match self {
            Self::LogRegEN(p) => p.validate(),
            Self::RandomForest(p) => p.validate(),
            Self::GradBoost(p) => p.validate(),
        }
    }
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LogRegEN(p) => write!(f, "lambda={} alpha={}", p.lambda, p.alpha),
            Self::RandomForest(p) => write!(f, "trees={} depth={}", p.n_trees, p.max_depth),
            Self::GradBoost(p) => {
                write!(f, "rounds={} depth={} lr={}", p.n_rounds, p.max_depth, p.learning_rate)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub hyperparams: Hyperparams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(hyperparams: Hyperparams, seed: u64) -> Self {
        Self { hyperparams, seed }
    }

    pub fn kind(&self) -> ModelKind {
        self.hyperparams.kind()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TrainedModel {
    LogRegEN(LogisticModel),
    RandomForest(ForestModel),
    GradBoost(GbtModel),
}

pub(crate) fn check_training_data(x: &Matrix, y: &[u8]) -> Result<usize, LearnError> {
    if x.rows() != y.len() {
        return Err(LearnError::DimensionMismatch { expected: x.rows(), found: y.len() });
    }
    if x.data().iter().any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite("feature value"));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(LearnError::SingleClass);
    }
    Ok(pos)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn train(x: &Matrix, y: &[u8], spec: &ModelSpec) -> Result<TrainedModel, LearnError> {
    spec.hyperparams.validate()?;
    match &spec.hyperparams {
        Hyperparams::LogRegEN(p) => train_logreg_en(x, y, p).map(TrainedModel::LogRegEN),
        Hyperparams::RandomForest(p) => train_rf(x, y, p, spec.seed).map(TrainedModel::RandomForest),
        Hyperparams::GradBoost(p) => train_gbt(x, y, p).map(TrainedModel::GradBoost),
    }
}

const FORMAT: &str = "gkc-model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format: String,
    version: u32,
    model: M,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            Self::LogRegEN(_) => ModelKind::LogRegEN,
            Self::RandomForest(_) => ModelKind::RandomForest,
            Self::GradBoost(_) => ModelKind::GradBoost,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Self::LogRegEN(m) => m.n_features(),
            Self::RandomForest(m) => m.n_features,
            Self::GradBoost(m) => m.n_features,
        }
    }

    pub fn predict_scores(&self, x: &Matrix) -> Result<Vec<f64>, LearnError> {
        if x.cols() != self.n_features() {
            return Err(LearnError::DimensionMismatch { expected: self.n_features(), found: x.cols() });
        }
        Ok((0..x.rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            Self::LogRegEN(m) => m.predict_row(row),
            Self::RandomForest(m) => m.predict_row(row),
            Self::GradBoost(m) => m.predict_row(row),
        }
    }

    pub fn to_json(&self) -> String {
        let env = Envelope { format: FORMAT.to_string(), version: VERSION, model: self };
        serde_json::to_string(&env).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        let env: Envelope<TrainedModel> = serde_json::from_str(text).map_err(|e| LearnError::Format(e.to_string()))?;
        if env.format != FORMAT || env.version != VERSION {
            return Err(LearnError::Format(format!("unsupported {} v{}", env.format, env.version)));
        }
        Ok(env.model)
    }
}

pub fn predict_scores(model: &TrainedModel, x: &Matrix) -> Result<Vec<f64>, LearnError> {
    model.predict_scores(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_selection() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        assert_eq!(m.select_rows(&[1]).row(0), &[4.0, 5.0, 6.0]);
        let c = m.select_col_ranges(&[2..3, 0..1]);
        assert_eq!(c.row(1), &[6.0, 4.0]);
        assert_eq!(m.column(1), vec![2.0, 5.0]);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("gradboost".parse::<ModelKind>().unwrap(), ModelKind::GradBoost);
        assert_eq!("LogRegEN".parse::<ModelKind>().unwrap(), ModelKind::LogRegEN);
        assert_eq!("random_forest".parse::<ModelKind>().unwrap(), ModelKind::RandomForest);
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
