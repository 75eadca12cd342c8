//! Design matrices for the three representation strategies.
//!
//! ENF column layout (full subset, 78 columns):
//!
//! | columns | content |
//! |---------|---------|
//! | 0..50   | lab block: for each test in canonical order, its 5-slot series oldest to newest, z-scored with training-fold statistics |
//! | 50      | gene block: number of distinct mutated genes |
//! | 51..78  | med block: one 0/1 flag per drug class, in class-registry order |
//!
//! CTE and GKC matrices concatenate one embedding per modality in
//! `Lab, Gene, Med` order.

mod audit;

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::{cohort_labels, CensoredError, LabTest, NoObservationError, PatientRecord, SERIES_LEN};
use crate::embedding::{concat_subset, EmbeddingError, EmbeddingVector};
use crate::knowledge::{KnowledgeBase, DRUG_CLASS_COUNT};
use crate::learn::Matrix;
use crate::{layout_spans, GroupSpan, Modality, ModalitySubset};

pub(crate) use audit::note;
pub use audit::{AccessLog, Phase};

pub const LAB_BLOCK_WIDTH: usize = LabTest::ALL.len() * SERIES_LEN;
pub const GENE_BLOCK_WIDTH: usize = 1;
pub const MED_BLOCK_WIDTH: usize = DRUG_CLASS_COUNT;
pub const ENF_WIDTH: usize = LAB_BLOCK_WIDTH + GENE_BLOCK_WIDTH + MED_BLOCK_WIDTH;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    ENF,
    CTE,
    GKC,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::ENF, Strategy::CTE, Strategy::GKC];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "ENF" => Ok(Self::ENF),
            "CTE" => Ok(Self::CTE),
            "GKC" => Ok(Self::GKC),
            _ => Err(format!("unknown strategy `{s}` (expected ENF, CTE, or GKC)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("fold statistics need at least 2 training patients, got {0}")]
    InsufficientData(usize),
    #[error("missing {} artifact(s), first: {} {}", .0.len(), .0[0].0, .0[0].1)]
    MissingArtifact(Vec<(String, Modality)>),
    #[error("text strategy {0} requires embeddings")]
    NoTextFeatures(Strategy),
    #[error("patient {patient_id}: {source}")]
    Lab { patient_id: String, source: NoObservationError },
    #[error("patient {patient_id}: unknown drug class `{class_id}`")]
    UnknownClass { patient_id: String, class_id: String },
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Label(#[from] CensoredError),
}

/// Per-test mean and sample standard deviation over all series slots of the
/// training patients. A zero or undefined deviation is degenerate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabFoldStats {
    pub mean: [f64; 10],
    pub sd: [f64; 10],
}

impl LabFoldStats {
    pub fn is_degenerate(&self, test: LabTest) -> bool {
        !(self.sd[test.index()] > 0.0)
    }

    pub fn z(&self, test: LabTest, value: f64) -> f64 {
        if self.is_degenerate(test) {
            0.0
        } else {
            (value - self.mean[test.index()]) / self.sd[test.index()]
        }
    }

    fn from_blocks<'a>(blocks: impl Iterator<Item = &'a [f64]>) -> Result<Self, FeatureError> {
        let blocks: Vec<&[f64]> = blocks.collect();
        if blocks.len() < 2 {
            return Err(FeatureError::InsufficientData(blocks.len()));
        }
        let mut mean = [0.0; 10];
        let mut sd = [0.0; 10];
        for test in LabTest::ALL {
            let slots = test.index() * SERIES_LEN..(test.index() + 1) * SERIES_LEN;
            let values: Vec<f64> = blocks.iter().flat_map(|b| b[slots.clone()].iter().copied()).collect();
            let n = values.len() as f64;
            let m = values.iter().sum::<f64>() / n;
            let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
            mean[test.index()] = m;
            sd[test.index()] = (ss / (n - 1.0)).sqrt();
        }
        Ok(Self { mean, sd })
    }
}

/// Raw, fold-independent ENF inputs of one patient.
#[derive(Clone, Debug, PartialEq)]
pub struct EnfRow {
    pub labs: [f64; LAB_BLOCK_WIDTH],
    pub gene_count: f64,
    pub med_flags: [f64; MED_BLOCK_WIDTH],
}

impl EnfRow {
    pub fn from_record(p: &PatientRecord, kb: &KnowledgeBase) -> Result<Self, FeatureError> {
        let mut labs = [0.0; LAB_BLOCK_WIDTH];
        for test in LabTest::ALL {
            let series =
                p.lab_series(test).map_err(|source| FeatureError::Lab { patient_id: p.patient_id.clone(), source })?;
            labs[test.index() * SERIES_LEN..(test.index() + 1) * SERIES_LEN].copy_from_slice(&series);
        }
        let mut med_flags = [0.0; MED_BLOCK_WIDTH];
        for class_id in p.drug_classes() {
            let i = kb.classes.class_index(class_id).ok_or_else(|| FeatureError::UnknownClass {
                patient_id: p.patient_id.clone(),
                class_id: class_id.to_string(),
            })?;
            med_flags[i] = 1.0;
        }
        Ok(Self { labs, gene_count: p.mutated_genes().len() as f64, med_flags })
    }

    fn write(&self, stats: &LabFoldStats, subset: ModalitySubset, out: &mut Vec<f64>) {
        if subset.contains(Modality::Lab) {
            for test in LabTest::ALL {
                let slots = &self.labs[test.index() * SERIES_LEN..(test.index() + 1) * SERIES_LEN];
                out.extend(slots.iter().map(|&v| stats.z(test, v)));
            }
        }
        if subset.contains(Modality::Gene) {
            out.push(self.gene_count);
        }
        if subset.contains(Modality::Med) {
            out.extend_from_slice(&self.med_flags);
        }
    }
}

fn block_width(m: Modality) -> usize {
    match m {
        Modality::Lab => LAB_BLOCK_WIDTH,
        Modality::Gene => GENE_BLOCK_WIDTH,
        Modality::Med => MED_BLOCK_WIDTH,
    }
}

pub fn enf_spans(subset: ModalitySubset) -> Vec<GroupSpan> {
    layout_spans(subset.iter().map(|m| (m, block_width(m))))
}

/// Column names of the ENF layout for `subset`.
pub fn enf_column_names(kb: &KnowledgeBase, subset: ModalitySubset) -> Vec<String> {
    let mut names = Vec::new();
    if subset.contains(Modality::Lab) {
        for test in LabTest::ALL {
            let id = test.spec().name.to_ascii_lowercase().replace([' ', '-'], "_");
            names.extend((1..=SERIES_LEN).map(|k| format!("lab.{id}.t{k}")));
        }
    }
    if subset.contains(Modality::Gene) {
        names.push("gene.mutation_count".to_string());
    }
    if subset.contains(Modality::Med) {
        names.extend(kb.classes.classes().iter().map(|c| format!("med.{}", c.class_id)));
    }
    names
}

pub fn fit_lab_stats(training: &[&PatientRecord]) -> Result<LabFoldStats, FeatureError> {
    let rows: Vec<[f64; LAB_BLOCK_WIDTH]> = training
        .iter()
        .map(|p| {
            let mut labs = [0.0; LAB_BLOCK_WIDTH];
            for test in LabTest::ALL {
                let series = p
                    .lab_series(test)
                    .map_err(|source| FeatureError::Lab { patient_id: p.patient_id.clone(), source })?;
                labs[test.index() * SERIES_LEN..(test.index() + 1) * SERIES_LEN].copy_from_slice(&series);
            }
            Ok(labs)
        })
        .collect::<Result<_, FeatureError>>()?;
    LabFoldStats::from_blocks(rows.iter().map(|r| r.as_slice()))
}

pub fn build_enf(
    p: &PatientRecord,
    stats: &LabFoldStats,
    subset: ModalitySubset,
    kb: &KnowledgeBase,
) -> Result<Vec<f64>, FeatureError> {
    let mut out = Vec::with_capacity(ENF_WIDTH);
    EnfRow::from_record(p, kb)?.write(stats, subset, &mut out);
    Ok(out)
}

/// Per-patient, per-modality embeddings of one text strategy.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TextFeatures {
    pub vectors: BTreeMap<(String, Modality), EmbeddingVector>,
}

impl TextFeatures {
    pub fn insert(&mut self, patient_id: &str, m: Modality, v: EmbeddingVector) {
        self.vectors.insert((patient_id.to_string(), m), v);
    }

    pub fn get(&self, patient_id: &str, m: Modality) -> Option<&EmbeddingVector> {
        self.vectors.get(&(patient_id.to_string(), m))
    }
}

pub fn build_text_features(
    patient_id: &str,
    subset: ModalitySubset,
    store: &TextFeatures,
) -> Result<(Vec<f64>, Vec<GroupSpan>), FeatureError> {
    let mut parts = Vec::with_capacity(subset.len());
    let mut missing = Vec::new();
    for m in subset.iter() {
        match store.get(patient_id, m) {
            Some(v) => parts.push((m, v)),
            None => missing.push((patient_id.to_string(), m)),
        }
    }
    if !missing.is_empty() {
        return Err(FeatureError::MissingArtifact(missing));
    }
    Ok(concat_subset(&parts)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub strategy: Strategy,
    pub subset: ModalitySubset,
    pub matrix: Matrix,
    pub group_spans: Vec<GroupSpan>,
    pub row_ids: Vec<String>,
    pub labels: Vec<u8>,
}

impl FeatureMatrix {
    /// Tab-separated export: `#` header lines with strategy, subset and
    /// spans, a column-name line, then `row_id label values...` rows.
    pub fn to_tsv(&self, column_names: Option<&[String]>) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "# strategy\t{}", self.strategy);
        let _ = writeln!(out, "# subset\t{}", self.subset);
        for s in &self.group_spans {
            let _ = writeln!(out, "# span\t{}\t{}\t{}", s.modality.as_str(), s.start, s.end);
        }
        let mut header = vec!["row_id".to_string(), "label".to_string()];
        match column_names {
            Some(names) => header.extend(names.iter().cloned()),
            None => header.extend((0..self.matrix.cols()).map(|j| format!("f{j}"))),
        }
        let _ = writeln!(out, "{}", header.join("\t"));
        for i in 0..self.matrix.rows() {
            let values: Vec<String> = self.matrix.row(i).iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}\t{}\t{}", self.row_ids[i], self.labels[i], values.join("\t"));
        }
        out
    }
}

enum SourceKind {
    Enf(Vec<EnfRow>),
    Fixed(FeatureMatrix),
}

/// Produces the design matrix of each fold. Text strategies are fold
/// independent; ENF refits lab statistics on the fold's training rows.
pub struct FeatureSource {
    strategy: Strategy,
    subset: ModalitySubset,
    row_ids: Vec<String>,
    labels: Vec<u8>,
    kind: SourceKind,
}

impl FeatureSource {
    pub fn new(
        cohort: &[PatientRecord],
        kb: &KnowledgeBase,
        strategy: Strategy,
        subset: ModalitySubset,
        text: Option<&TextFeatures>,
    ) -> Result<Self, FeatureError> {
        let labels = cohort_labels(cohort)?;
        let row_ids: Vec<String> = cohort.iter().map(|p| p.patient_id.clone()).collect();
        let kind = match strategy {
            Strategy::ENF => {
                SourceKind::Enf(cohort.par_iter().map(|p| EnfRow::from_record(p, kb)).collect::<Result<_, _>>()?)
            }
            Strategy::CTE | Strategy::GKC => {
                let store = text.ok_or(FeatureError::NoTextFeatures(strategy))?;
                let results: Vec<_> = row_ids.par_iter().map(|id| build_text_features(id, subset, store)).collect();
                let mut rows = Vec::with_capacity(results.len());
                let mut spans = Vec::new();
                let mut missing = Vec::new();
                for r in results {
                    match r {
                        Ok((row, s)) => {
                            spans = s;
                            rows.push(row);
                        }
                        Err(FeatureError::MissingArtifact(m)) => missing.extend(m),
                        Err(e) => return Err(e),
                    }
                }
                if !missing.is_empty() {
                    return Err(FeatureError::MissingArtifact(missing));
                }
                let width = rows.first().map_or(0, Vec::len);
                if let Some(bad) = rows.iter().find(|r| r.len() != width) {
                    return Err(EmbeddingError::DimensionMismatch { expected: width, found: bad.len() }.into());
                }
                SourceKind::Fixed(FeatureMatrix {
                    strategy,
                    subset,
                    matrix: Matrix::from_rows(&rows),
                    group_spans: spans,
                    row_ids: row_ids.clone(),
                    labels: labels.clone(),
                })
            }
        };
        Ok(Self { strategy, subset, row_ids, labels, kind })
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn subset(&self) -> ModalitySubset {
        self.subset
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    /// Lab statistics fitted on `train` alone; `None` for text strategies.
    pub fn fit_stats(&self, train: &[usize], log: Option<&AccessLog>) -> Result<Option<LabFoldStats>, FeatureError> {
        match &self.kind {
            SourceKind::Enf(rows) => {
                note(log, Phase::FoldStats, train);
                LabFoldStats::from_blocks(train.iter().map(|&i| rows[i].labs.as_slice())).map(Some)
            }
            SourceKind::Fixed(_) => Ok(None),
        }
    }

    /// The full matrix, with ENF labs z-scored by statistics fitted on `train`.
    pub fn matrix_for_fold(
        &self,
        train: &[usize],
        log: Option<&AccessLog>,
    ) -> Result<Cow<'_, FeatureMatrix>, FeatureError> {
        match &self.kind {
            SourceKind::Fixed(m) => Ok(Cow::Borrowed(m)),
            SourceKind::Enf(rows) => {
                let stats = self.fit_stats(train, log)?.expect("ENF source has stats");
                Ok(Cow::Owned(self.enf_matrix(rows, &stats)))
            }
        }
    }

    fn enf_matrix(&self, rows: &[EnfRow], stats: &LabFoldStats) -> FeatureMatrix {
        let spans = enf_spans(self.subset);
        let width: usize = spans.iter().map(GroupSpan::width).sum();
        let mut data = Vec::with_capacity(rows.len() * width);
        for r in rows {
            r.write(stats, self.subset, &mut data);
        }
        FeatureMatrix {
            strategy: self.strategy,
            subset: self.subset,
            matrix: Matrix::new(rows.len(), width, data),
            group_spans: spans,
            row_ids: self.row_ids.clone(),
            labels: self.labels.clone(),
        }
    }
}

/// One-shot assembly for a given training split.
pub fn assemble_matrix(
    cohort: &[PatientRecord],
    kb: &KnowledgeBase,
    strategy: Strategy,
    subset: ModalitySubset,
    train: &[usize],
    text: Option<&TextFeatures>,
) -> Result<FeatureMatrix, FeatureError> {
    let source = FeatureSource::new(cohort, kb, strategy, subset, text)?;
    Ok(source.matrix_for_fold(train, None)?.into_owned())
}
