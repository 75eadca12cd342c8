//! Evaluation protocol: repeated stratified cross-validation with inner
//! tuning, bootstrap intervals, paired Wilcoxon comparisons, modality
//! ablation, and modality attribution.
//!
//! Every random stream derives from `(seed, repeat, fold, purpose)`, so
//! results do not depend on how folds are scheduled across threads.

mod attribution;
mod cv;
mod results;
mod stats;
mod tune;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{note, AccessLog, FeatureError, FeatureSource, Phase, Strategy};
use crate::learn::{auc_prc, auc_roc, train, Hyperparams, LearnError, ModelKind, ModelSpec, TrainedModel};
use crate::seeds::{derive_seed, purpose};
use crate::ModalitySubset;

pub use attribution::{
    attribute_modalities, linear_group_shapley, normalize_shares, AttributionResult, ContributionMethod,
    GroupAttribution, DEFAULT_PERMUTATIONS, DEGENERATE_MARGIN,
};
pub use cv::{make_cv_plan, CvPlan};
pub use results::{read_records_tsv, records_tsv, AblationSummaryRow, ConfigSummary, ResultsSummary, RECORDS_HEADER};
pub use stats::{
    bootstrap_ci, sample_sd, wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N, MIN_PAIRS,
};
pub use tune::{default_grid, inner_scores, inner_tune, GRID_VERSION, INNER_FOLDS};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_REPEATS: usize = 10;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const CI_LEVEL: f64 = 0.95;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("each class needs at least {folds} rows (have {positives} positive, {negatives} negative)")]
    TooFewPerClass { positives: usize, negatives: usize, folds: usize },
    #[error("Wilcoxon test needs at least 5 nonzero differences, got {0}")]
    TooFewPairs(usize),
    #[error("unpaired samples: {0}")]
    Unpaired(String),
    #[error("non-finite metric value")]
    NonFinite,
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("every grid point failed during inner tuning")]
    AllGridPointsFailed,
    #[error("grid contains {found} hyperparameters for a {expected} run")]
    GridKind { expected: ModelKind, found: ModelKind },
    #[error("plan covers {plan} rows but the feature source has {source_rows}")]
    PlanMismatch { plan: usize, source_rows: usize },
    #[error("attribution undefined: baseline AUC {0} is not above chance")]
    DegenerateModel(f64),
    #[error("group spans: {0}")]
    Spans(String),
    #[error("fold (repeat {repeat}, fold {fold}): {source}")]
    Fold { repeat: usize, fold: usize, source: Box<EvalError> },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AucRoc,
    AucPrc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub repeat: usize,
    pub fold: usize,
    pub strategy: Strategy,
    pub subset: ModalitySubset,
    pub model: ModelKind,
    pub hyperparams: Hyperparams,
    pub auc_roc: f64,
    pub auc_prc: f64,
}

impl MetricsRecord {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::AucRoc => self.auc_roc,
            Metric::AucPrc => self.auc_prc,
        }
    }

    /// Configuration label, e.g. `GKC/Lab+Gene+Med/GradBoost`.
    pub fn config_label(&self) -> String {
        format!("{}/{}/{}", self.strategy, self.subset, self.model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn summarize(values: &[f64], seed: u64) -> MetricsSummary {
    let (ci_lo, ci_hi) = bootstrap_ci(values, BOOTSTRAP_RESAMPLES, CI_LEVEL, seed);
    MetricsSummary { n: values.len(), mean: stats::stable_mean(values), sd: sample_sd(values), ci_lo, ci_hi }
}

pub fn metric_values(records: &[MetricsRecord], m: Metric) -> Vec<f64> {
    records.iter().map(|r| r.metric(m)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub a: String,
    pub b: String,
    pub metric: Metric,
    pub mean_a: f64,
    pub mean_b: f64,
    pub test: WilcoxonResult,
}

/// Paired test over records with identical `(repeat, fold)` keys.
pub fn compare_records(
    a: &[MetricsRecord],
    b: &[MetricsRecord],
    metric: Metric,
) -> Result<ComparisonResult, EvalError> {
    let key = |r: &MetricsRecord| (r.repeat, r.fold);
    let mut a_sorted: Vec<&MetricsRecord> = a.iter().collect();
    let mut b_sorted: Vec<&MetricsRecord> = b.iter().collect();
    a_sorted.sort_by_key(|r| key(r));
    b_sorted.sort_by_key(|r| key(r));
    let ka: Vec<_> = a_sorted.iter().map(|r| key(r)).collect();
    let kb: Vec<_> = b_sorted.iter().map(|r| key(r)).collect();
    if ka != kb || ka.iter().collect::<BTreeSet<_>>().len() != ka.len() {
        return Err(EvalError::Unpaired("records do not share identical (repeat, fold) keys".into()));
    }
    let va: Vec<f64> = a_sorted.iter().map(|r| r.metric(metric)).collect();
    let vb: Vec<f64> = b_sorted.iter().map(|r| r.metric(metric)).collect();
    let label = |rs: &[&MetricsRecord]| rs.first().map(|r| r.config_label()).unwrap_or_default();
    Ok(ComparisonResult {
        a: label(&a_sorted),
        b: label(&b_sorted),
        metric,
        mean_a: stats::stable_mean(&va),
        mean_b: stats::stable_mean(&vb),
        test: wilcoxon_signed_rank(&va, &vb)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvOptions {
    pub inner_folds: usize,
    /// Record every row read per fold and phase.
    pub audit: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self { inner_folds: INNER_FOLDS, audit: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub repeat: usize,
    pub fold: usize,
    pub test_rows: Vec<usize>,
    pub fold_stats_rows: usize,
    pub inner_tune_rows: usize,
    pub final_fit_rows: usize,
    /// Test rows read outside scoring; empty when the fold is leak-free.
    pub leaked_rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvRun {
    pub records: Vec<MetricsRecord>,
    pub audits: Vec<FoldAudit>,
}

fn fold_seed(plan: &CvPlan, repeat: usize, fold: usize) -> u64 {
    derive_seed(plan.seed, &[repeat as u64, fold as u64])
}

fn check_grid(kind: ModelKind, grid: &[Hyperparams]) -> Result<(), EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    for hp in grid {
        if hp.kind() != kind {
            return Err(EvalError::GridKind { expected: kind, found: hp.kind() });
        }
        hp.validate()?;
    }
    Ok(())
}

struct FoldOutcome {
    record: MetricsRecord,
    audit: Option<FoldAudit>,
    model: TrainedModel,
    test: Vec<usize>,
    x_test: crate::learn::Matrix,
}

fn run_fold(
    plan: &CvPlan,
    source: &FeatureSource,
    kind: ModelKind,
    grid: &[Hyperparams],
    opts: &CvOptions,
    repeat: usize,
    fold: usize,
) -> Result<FoldOutcome, EvalError> {
    let (train_rows, test_rows) = plan.split(repeat, fold);
    let log = opts.audit.then(AccessLog::new);
    let fm = source.matrix_for_fold(&train_rows, log.as_ref())?;
    let y = &fm.labels;
    let seed = fold_seed(plan, repeat, fold);
    let inner_seed = derive_seed(seed, &[purpose::INNER_CV]);
    let hp = inner_tune(&fm.matrix, y, &train_rows, grid, opts.inner_folds, inner_seed, log.as_ref())?;

    note(log.as_ref(), Phase::FinalFit, &train_rows);
    let x_train = fm.matrix.select_rows(&train_rows);
    let y_train: Vec<u8> = train_rows.iter().map(|&i| y[i]).collect();
    let spec = ModelSpec::new(hp.clone(), derive_seed(seed, &[purpose::MODEL]));
    let model = train(&x_train, &y_train, &spec)?;

    note(log.as_ref(), Phase::Scoring, &test_rows);
    let x_test = fm.matrix.select_rows(&test_rows);
    let y_test: Vec<u8> = test_rows.iter().map(|&i| y[i]).collect();
    let scores = model.predict_scores(&x_test)?;
    let record = MetricsRecord {
        repeat,
        fold,
        strategy: source.strategy(),
        subset: source.subset(),
        model: kind,
        hyperparams: hp,
        auc_roc: auc_roc(&scores, &y_test)?,
        auc_prc: auc_prc(&scores, &y_test)?,
    };
    let audit = log.map(|log| FoldAudit {
        repeat,
        fold,
        fold_stats_rows: log.rows_read(Phase::FoldStats).len(),
        inner_tune_rows: log.rows_read(Phase::InnerTune).len(),
        final_fit_rows: log.rows_read(Phase::FinalFit).len(),
        leaked_rows: log.leaked(&test_rows).into_iter().collect(),
        test_rows: test_rows.clone(),
    });
    Ok(FoldOutcome { record, audit, model, test: test_rows, x_test })
}

fn run_folds(
    plan: &CvPlan,
    source: &FeatureSource,
    kind: ModelKind,
    grid: &[Hyperparams],
    opts: &CvOptions,
    folds: &[(usize, usize)],
) -> Result<Vec<FoldOutcome>, EvalError> {
    check_grid(kind, grid)?;
    if plan.n_rows() != source.n_rows() {
        return Err(EvalError::PlanMismatch { plan: plan.n_rows(), source_rows: source.n_rows() });
    }
    folds
        .par_iter()
        .map(|&(r, f)| {
            run_fold(plan, source, kind, grid, opts, r, f).map_err(|e| EvalError::Fold {
                repeat: r,
                fold: f,
                source: Box::new(e),
            })
        })
        .collect()
}

/// One record per `(repeat, fold)`, sorted. Any fold failure aborts the run.
pub fn run_cv(
    plan: &CvPlan,
    source: &FeatureSource,
    kind: ModelKind,
    grid: &[Hyperparams],
    opts: &CvOptions,
) -> Result<CvRun, EvalError> {
    let outcomes = run_folds(plan, source, kind, grid, opts, &plan.folds())?;
    let mut records = Vec::with_capacity(outcomes.len());
    let mut audits = Vec::new();
    for o in outcomes {
        records.push(o.record);
        audits.extend(o.audit);
    }
    records.sort_by_key(|r| (r.repeat, r.fold));
    Ok(CvRun { records, audits })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub subset: ModalitySubset,
    pub auc_roc: MetricsSummary,
    pub auc_prc: MetricsSummary,
    pub records: Vec<MetricsRecord>,
}

/// One cross-validation per nonempty modality subset, all on the same plan.
pub fn run_ablation(
    plan: &CvPlan,
    mut source_for: impl FnMut(ModalitySubset) -> Result<FeatureSource, EvalError>,
    kind: ModelKind,
    grid: &[Hyperparams],
    opts: &CvOptions,
) -> Result<Vec<AblationRow>, EvalError> {
    let mut rows = Vec::with_capacity(7);
    for subset in ModalitySubset::all_nonempty() {
        let source = source_for(subset)?;
        let run = run_cv(plan, &source, kind, grid, opts)?;
        let seed = derive_seed(plan.seed, &[purpose::BOOTSTRAP]);
        rows.push(AblationRow {
            subset,
            auc_roc: summarize(&metric_values(&run.records, Metric::AucRoc), seed),
            auc_prc: summarize(&metric_values(&run.records, Metric::AucPrc), seed),
            records: run.records,
        });
    }
    Ok(rows)
}

/// Grouped permutation importance measured on held-out folds of the first
/// `n_repeats` repeats of `plan`. Per-patient contributions come from the
/// fold in which each patient was held out.
pub fn attribute_cv(
    plan: &CvPlan,
    source: &FeatureSource,
    kind: ModelKind,
    grid: &[Hyperparams],
    n_repeats: usize,
    n_permutations: usize,
) -> Result<AttributionResult, EvalError> {
    let folds: Vec<(usize, usize)> =
        plan.folds().into_iter().filter(|(r, _)| *r < n_repeats.clamp(1, plan.n_repeats)).collect();
    let outcomes = run_folds(plan, source, kind, grid, &CvOptions::default(), &folds)?;
    let spans = source.matrix_for_fold(&plan.split(0, 0).0, None)?.group_spans.clone();
    let mut per_patient = vec![vec![0.0; spans.len()]; plan.n_rows()];
    let mut counts = vec![0usize; plan.n_rows()];
    let mut method = ContributionMethod::PermutationDelta;
    let mut pooled = Vec::with_capacity(outcomes.len());
    for o in &outcomes {
        let y_test: Vec<u8> = o.test.iter().map(|&i| source.labels()[i]).collect();
        let seed = fold_seed(plan, o.record.repeat, o.record.fold);
        let (baseline, drops, deltas) =
            attribution::permutation_drops(&o.model, &o.x_test, &y_test, &spans, seed, n_permutations.max(1))?;
        let contrib = match linear_group_shapley(&o.model, &o.x_test, &spans) {
            Some(c) => {
                method = ContributionMethod::LinearShapley;
                c
            }
            None => deltas,
        };
        for (k, &row) in o.test.iter().enumerate() {
            for g in 0..spans.len() {
                per_patient[row][g] += contrib[k][g];
            }
            counts[row] += 1;
        }
        pooled.push((baseline, drops));
    }
    for (row, c) in per_patient.iter_mut().zip(&counts) {
        if *c > 0 {
            row.iter_mut().for_each(|v| *v /= *c as f64);
        }
    }
    attribution::pool_fold_attributions(&spans, pooled, per_patient, method)
}

/// Tunes on all rows and fits one model, e.g. for attribution or export.
pub fn fit_full(
    source: &FeatureSource,
    kind: ModelKind,
    grid: &[Hyperparams],
    seed: u64,
) -> Result<(TrainedModel, crate::features::FeatureMatrix), EvalError> {
    check_grid(kind, grid)?;
    let rows: Vec<usize> = (0..source.n_rows()).collect();
    let fm = source.matrix_for_fold(&rows, None)?.into_owned();
    let hp =
        inner_tune(&fm.matrix, &fm.labels, &rows, grid, INNER_FOLDS, derive_seed(seed, &[purpose::INNER_CV]), None)?;
    let model = train(&fm.matrix, &fm.labels, &ModelSpec::new(hp, derive_seed(seed, &[purpose::MODEL])))?;
    Ok((model, fm))
}
