//! Analytic cohort: landmark eligibility, outcome labels, lab series, and
//! validation.
//!
//! Days are integers. `diagnosis_day`, `landmark_day`, `death_day` and
//! `followup_end_day` are epoch-days; event days (`observed_day`,
//! `prescribed_day`) are offsets from diagnosis.

mod io;
mod synth;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{KnowledgeBase, KnowledgeError};
use crate::Modality;

pub use io::{read_cohort, read_cohort_file, write_cohort, write_cohort_file, CohortIoError};
pub use synth::{generate_synthetic_cohort, ConfigError, SyntheticCohort, SyntheticConfig};
pub use validate::{validate_cohort, Rule, ValidationReport, Violation};

pub const LANDMARK_WINDOW_DAYS: i64 = 90;
pub const OUTCOME_HORIZON_DAYS: i64 = 365;
pub const SERIES_LEN: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabTest {
    Albumin,
    Hemoglobin,
    Platelets,
    Neutrophils,
    Lymphocytes,
    Leukocytes,
    Monocytes,
    CReactiveProtein,
    LactateDehydrogenase,
    Sodium,
}

/// Static description of one canonical test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalLabTest {
    pub id: LabTest,
    pub name: &'static str,
    pub unit: &'static str,
    pub reference_low: f64,
    pub reference_high: f64,
}

const CANONICAL_TESTS: [CanonicalLabTest; 10] = [
    CanonicalLabTest { id: LabTest::Albumin, name: "Albumin", unit: "g/dL", reference_low: 3.5, reference_high: 5.0 },
    CanonicalLabTest {
        id: LabTest::Hemoglobin,
        name: "Hemoglobin",
        unit: "g/dL",
        reference_low: 12.0,
        reference_high: 16.0,
    },
    CanonicalLabTest {
        id: LabTest::Platelets,
        name: "Platelets",
        unit: "10^3/uL",
        reference_low: 150.0,
        reference_high: 400.0,
    },
    CanonicalLabTest {
        id: LabTest::Neutrophils,
        name: "Neutrophils",
        unit: "10^3/uL",
        reference_low: 1.8,
        reference_high: 7.5,
    },
    CanonicalLabTest {
        id: LabTest::Lymphocytes,
        name: "Lymphocytes",
        unit: "10^3/uL",
        reference_low: 1.0,
        reference_high: 4.0,
    },
    CanonicalLabTest {
        id: LabTest::Leukocytes,
        name: "Leukocytes",
        unit: "10^3/uL",
        reference_low: 4.0,
        reference_high: 11.0,
    },
    CanonicalLabTest {
        id: LabTest::Monocytes,
        name: "Monocytes",
        unit: "10^3/uL",
        reference_low: 0.2,
        reference_high: 1.0,
    },
    CanonicalLabTest {
        id: LabTest::CReactiveProtein,
        name: "C-Reactive Protein",
        unit: "mg/L",
        reference_low: 0.0,
        reference_high: 5.0,
    },
    CanonicalLabTest {
        id: LabTest::LactateDehydrogenase,
        name: "Lactate Dehydrogenase",
        unit: "U/L",
        reference_low: 140.0,
        reference_high: 280.0,
    },
    CanonicalLabTest {
        id: LabTest::Sodium,
        name: "Sodium",
        unit: "mmol/L",
        reference_low: 135.0,
        reference_high: 145.0,
    },
];

impl LabTest {
    /// Canonical order, used for profiles and ENF columns.
    pub const ALL: [LabTest; 10] = [
        LabTest::Albumin,
        LabTest::Hemoglobin,
        LabTest::Platelets,
        LabTest::Neutrophils,
        LabTest::Lymphocytes,
        LabTest::Leukocytes,
        LabTest::Monocytes,
        LabTest::CReactiveProtein,
        LabTest::LactateDehydrogenase,
        LabTest::Sodium,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn spec(self) -> &'static CanonicalLabTest {
        &CANONICAL_TESTS[self.index()]
    }
}

impl fmt::Display for LabTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.spec().name)
    }
}

/// Per-test admissible value interval; values outside are dropped at ingestion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlausibilityBands {
    bands: Vec<(f64, f64)>,
}

impl PlausibilityBands {
    /// Each band is `multiple` times the reference width, centred on the
    /// reference interval and floored at zero.
    pub fn scaled(multiple: f64) -> Self {
        let bands = LabTest::ALL
            .iter()
            .map(|t| {
                let s = t.spec();
                let centre = 0.5 * (s.reference_low + s.reference_high);
                let half = 0.5 * multiple * (s.reference_high - s.reference_low);
                ((centre - half).max(0.0), centre + half)
            })
            .collect();
        Self { bands }
    }

    pub fn band(&self, test: LabTest) -> (f64, f64) {
        self.bands[test.index()]
    }

    pub fn set_band(&mut self, test: LabTest, low: f64, high: f64) {
        self.bands[test.index()] = (low, high);
    }

    pub fn contains(&self, test: LabTest, value: f64) -> bool {
        let (lo, hi) = self.band(test);
        value.is_finite() && value >= lo && value <= hi
    }
}

impl Default for PlausibilityBands {
    fn default() -> Self {
        Self::scaled(6.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabObservation {
    pub test: LabTest,
    pub value: f64,
    pub observed_day: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneMutationRecord {
    pub raw_symbol: String,
    pub canonical_symbol: String,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MedicationEventRecord {
    pub drug_id: String,
    pub class_id: String,
    pub prescribed_day: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientRecord {
    pub patient_id: String,
    pub diagnosis_day: i64,
    pub landmark_day: i64,
    pub death_day: Option<i64>,
    pub followup_end_day: i64,
    pub labs: Vec<LabObservation>,
    pub mutations: Vec<GeneMutationRecord>,
    pub meds: Vec<MedicationEventRecord>,
}

impl PatientRecord {
    pub fn has_modality(&self, m: Modality) -> bool {
        match m {
            Modality::Lab => !self.labs.is_empty(),
            Modality::Gene => !self.mutations.is_empty(),
            Modality::Med => !self.meds.is_empty(),
        }
    }

    /// Distinct canonical symbols, sorted.
    pub fn mutated_genes(&self) -> BTreeSet<&str> {
        self.mutations.iter().map(|m| m.canonical_symbol.as_str()).collect()
    }

    /// Distinct prescribed class ids, sorted.
    pub fn drug_classes(&self) -> BTreeSet<&str> {
        self.meds.iter().map(|m| m.class_id.as_str()).collect()
    }

    pub fn lab_series(&self, test: LabTest) -> Result<Vec<f64>, NoObservationError> {
        prepare_lab_series(&self.labs, test, SERIES_LEN)
    }
}

/// Pre-landmark input: events carry day offsets but are not yet windowed,
/// symbols are not yet normalized, and drug classes are not yet resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawPatient {
    pub patient_id: String,
    pub diagnosis_day: i64,
    pub death_day: Option<i64>,
    pub followup_end_day: i64,
    pub labs: Vec<LabObservation>,
    pub mutations: Vec<RawMutation>,
    pub meds: Vec<RawMedication>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMutation {
    pub symbol: String,
    pub detail: Option<String>,
    pub reported_day: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMedication {
    pub drug_id: String,
    pub prescribed_day: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IneligibleReason {
    DiedBeforeLandmark,
    MissingModality(Modality),
    /// A canonical lab test has no in-window observation.
    IncompleteLabs(LabTest),
    InsufficientFollowup,
}

impl fmt::Display for IneligibleReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DiedBeforeLandmark => f.write_str("died before landmark"),
            Self::MissingModality(m) => write!(f, "no in-window {m} data"),
            Self::IncompleteLabs(t) => write!(f, "no in-window {t} observation"),
            Self::InsufficientFollowup => f.write_str("follow-up ends before the outcome horizon"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LandmarkError {
    #[error("patient {patient_id} ineligible: {reason}")]
    Ineligible { patient_id: String, reason: IneligibleReason },
    #[error("patient {patient_id}: {source}")]
    Knowledge { patient_id: String, source: KnowledgeError },
}

impl LandmarkError {
    pub fn ineligible_reason(&self) -> Option<IneligibleReason> {
        match self {
            Self::Ineligible { reason, .. } => Some(*reason),
            Self::Knowledge { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkPolicy {
    pub window_days: i64,
    pub horizon_days: i64,
    pub plausibility: PlausibilityBands,
    /// Unknown or off-panel symbols and unknown drugs are errors when set,
    /// dropped with a warning otherwise.
    pub strict: bool,
}

impl Default for LandmarkPolicy {
    fn default() -> Self {
        Self {
            window_days: LANDMARK_WINDOW_DAYS,
            horizon_days: OUTCOME_HORIZON_DAYS,
            plausibility: PlausibilityBands::default(),
            strict: true,
        }
    }
}

pub fn apply_landmark_filter(
    raw: &RawPatient,
    policy: &LandmarkPolicy,
    kb: &KnowledgeBase,
) -> Result<PatientRecord, LandmarkError> {
    let landmark_day = raw.diagnosis_day + policy.window_days;
    let ineligible = |reason| LandmarkError::Ineligible { patient_id: raw.patient_id.clone(), reason };
    let knowledge = |source| LandmarkError::Knowledge { patient_id: raw.patient_id.clone(), source };

    if matches!(raw.death_day, Some(d) if d < landmark_day) {
        return Err(ineligible(IneligibleReason::DiedBeforeLandmark));
    }
    if raw.death_day.is_none() && raw.followup_end_day < landmark_day + policy.horizon_days {
        return Err(ineligible(IneligibleReason::InsufficientFollowup));
    }
    let in_window = |day: i64| (0..=policy.window_days).contains(&day);

    let labs: Vec<LabObservation> = raw
        .labs
        .iter()
        .filter(|o| in_window(o.observed_day))
        .filter(|o| {
            let ok = policy.plausibility.contains(o.test, o.value);
            if !ok {
                log::warn!("{}: dropping implausible {} value {}", raw.patient_id, o.test, o.value);
            }
            ok
        })
        .cloned()
        .collect();

    let mut mutations = Vec::new();
    for m in raw.mutations.iter().filter(|m| in_window(m.reported_day)) {
        let canonical = kb.normalize_gene_symbol(&m.symbol).and_then(|s| {
            if kb.panel.contains(&s) {
                Ok(s)
            } else {
                Err(KnowledgeError::UnknownSymbol(s))
            }
        });
        match canonical {
            Ok(canonical_symbol) => mutations.push(GeneMutationRecord {
                raw_symbol: m.symbol.clone(),
                canonical_symbol,
                detail: m.detail.clone(),
            }),
            Err(e) if policy.strict => return Err(knowledge(e)),
            Err(e) => log::warn!("{}: dropping mutation: {e}", raw.patient_id),
        }
    }

    let mut meds = Vec::new();
    for m in raw.meds.iter().filter(|m| in_window(m.prescribed_day)) {
        match kb.resolve_drug_class(&m.drug_id) {
            Ok(class) => meds.push(MedicationEventRecord {
                drug_id: m.drug_id.clone(),
                class_id: class.class_id.clone(),
                prescribed_day: m.prescribed_day,
            }),
            Err(e) if policy.strict => return Err(knowledge(e)),
            Err(e) => log::warn!("{}: dropping medication: {e}", raw.patient_id),
        }
    }

    if labs.is_empty() {
        return Err(ineligible(IneligibleReason::MissingModality(Modality::Lab)));
    }
    if mutations.is_empty() {
        return Err(ineligible(IneligibleReason::MissingModality(Modality::Gene)));
    }
    if meds.is_empty() {
        return Err(ineligible(IneligibleReason::MissingModality(Modality::Med)));
    }
    if let Some(t) = LabTest::ALL.into_iter().find(|t| !labs.iter().any(|o| o.test == *t)) {
        return Err(ineligible(IneligibleReason::IncompleteLabs(t)));
    }

    Ok(PatientRecord {
        patient_id: raw.patient_id.clone(),
        diagnosis_day: raw.diagnosis_day,
        landmark_day,
        death_day: raw.death_day,
        followup_end_day: raw.followup_end_day,
        labs,
        mutations,
        meds,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutcomeLabel(pub u8);

impl OutcomeLabel {
    pub fn is_positive(self) -> bool {
        self.0 == 1
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("patient {patient_id} is censored before the outcome horizon")]
pub struct CensoredError {
    pub patient_id: String,
}

/// 1 iff death falls within `horizon_days` of the landmark (inclusive).
pub fn label_outcome(p: &PatientRecord, horizon_days: i64) -> Result<OutcomeLabel, CensoredError> {
    match p.death_day {
        Some(d) if d - p.landmark_day <= horizon_days => Ok(OutcomeLabel(1)),
        Some(_) => Ok(OutcomeLabel(0)),
        None if p.followup_end_day >= p.landmark_day + horizon_days => Ok(OutcomeLabel(0)),
        None => Err(CensoredError { patient_id: p.patient_id.clone() }),
    }
}

/// Labels for a whole cohort, in cohort order.
pub fn cohort_labels(cohort: &[PatientRecord]) -> Result<Vec<u8>, CensoredError> {
    cohort.iter().map(|p| label_outcome(p, OUTCOME_HORIZON_DAYS).map(|l| l.0)).collect()
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("no observation for {0}")]
pub struct NoObservationError(pub LabTest);

/// The `k` most recent values of `test`, oldest first, right-padded with the
/// newest value. Same-day observations are ordered by value.
pub fn prepare_lab_series(obs: &[LabObservation], test: LabTest, k: usize) -> Result<Vec<f64>, NoObservationError> {
    let mut picked: Vec<(i64, f64)> =
        obs.iter().filter(|o| o.test == test).map(|o| (o.observed_day, o.value)).collect();
    if picked.is_empty() {
        return Err(NoObservationError(test));
    }
    picked.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let start = picked.len().saturating_sub(k);
    let mut series: Vec<f64> = picked[start..].iter().map(|&(_, v)| v).collect();
    let newest = *series.last().expect("nonempty");
    series.resize(k, newest);
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(test: LabTest, day: i64, value: f64) -> LabObservation {
        LabObservation { test, value, observed_day: day }
    }

    fn raw_patient() -> RawPatient {
        let mut labs = Vec::new();
        for t in LabTest::ALL {
            let s = t.spec();
            labs.push(obs(t, 30, 0.5 * (s.reference_low + s.reference_high)));
        }
        RawPatient {
            patient_id: "p1".into(),
            diagnosis_day: 1000,
            death_day: None,
            followup_end_day: 1000 + 90 + 400,
            labs,
            mutations: vec![RawMutation { symbol: "tp53".into(), detail: None, reported_day: 5 }],
            meds: vec![RawMedication { drug_id: "cisplatin-fixture".into(), prescribed_day: 10 }],
        }
    }

    #[test]
    fn series_padding_and_selection() {
        let o = vec![obs(LabTest::Albumin, 40, 3.4), obs(LabTest::Albumin, 10, 3.1)];
        assert_eq!(prepare_lab_series(&o, LabTest::Albumin, 5).unwrap(), vec![3.1, 3.4, 3.4, 3.4, 3.4]);

        let seven: Vec<_> = (0..7).map(|i| obs(LabTest::Sodium, 80 - i * 10, 130.0 + i as f64)).collect();
        assert_eq!(prepare_lab_series(&seven, LabTest::Sodium, 5).unwrap(), vec![134.0, 133.0, 132.0, 131.0, 130.0]);

        let five: Vec<_> = (0..5).map(|i| obs(LabTest::Sodium, i * 10, 140.0 - i as f64)).collect();
        assert_eq!(prepare_lab_series(&five, LabTest::Sodium, 5).unwrap(), vec![140.0, 139.0, 138.0, 137.0, 136.0]);

        assert_eq!(prepare_lab_series(&five, LabTest::Albumin, 5), Err(NoObservationError(LabTest::Albumin)));
    }

    #[test]
    fn labels_with_inclusive_boundary() {
        let kb = KnowledgeBase::bundled();
        let mut p = apply_landmark_filter(&raw_patient(), &LandmarkPolicy::default(), &kb).unwrap();
        assert_eq!(label_outcome(&p, 365).unwrap(), OutcomeLabel(0));
        p.death_day = Some(p.landmark_day + 200);
        assert_eq!(label_outcome(&p, 365).unwrap(), OutcomeLabel(1));
        p.death_day = Some(p.landmark_day + 400);
        assert_eq!(label_outcome(&p, 365).unwrap(), OutcomeLabel(0));
        p.death_day = Some(p.landmark_day + 365);
        assert_eq!(label_outcome(&p, 365).unwrap(), OutcomeLabel(1));
        p.death_day = None;
        p.followup_end_day = p.landmark_day + 100;
        assert!(label_outcome(&p, 365).is_err());
    }

    #[test]
    fn landmark_filter_cases() {
        let kb = KnowledgeBase::bundled();
        let policy = LandmarkPolicy::default();

        let mut raw = raw_patient();
        raw.death_day = Some(raw.diagnosis_day + 60);
        let err = apply_landmark_filter(&raw, &policy, &kb).unwrap_err();
        assert_eq!(err.ineligible_reason(), Some(IneligibleReason::DiedBeforeLandmark));

        let mut raw = raw_patient();
        raw.labs.push(obs(LabTest::Albumin, 120, 3.9));
        let p = apply_landmark_filter(&raw, &policy, &kb).unwrap();
        assert_eq!(p.labs.len(), 10);
        assert_eq!(p.landmark_day, 1090);
        assert_eq!(p.mutations[0].canonical_symbol, "TP53");
        assert_eq!(p.meds[0].class_id, "platinum_chemo");

        let mut raw = raw_patient();
        raw.meds[0].prescribed_day = 95;
        let err = apply_landmark_filter(&raw, &policy, &kb).unwrap_err();
        assert_eq!(err.ineligible_reason(), Some(IneligibleReason::MissingModality(Modality::Med)));

        let mut raw = raw_patient();
        raw.followup_end_day = raw.diagnosis_day + 200;
        let err = apply_landmark_filter(&raw, &policy, &kb).unwrap_err();
        assert_eq!(err.ineligible_reason(), Some(IneligibleReason::InsufficientFollowup));

        let mut raw = raw_patient();
        raw.labs.retain(|o| o.test != LabTest::Sodium);
        let err = apply_landmark_filter(&raw, &policy, &kb).unwrap_err();
        assert_eq!(err.ineligible_reason(), Some(IneligibleReason::IncompleteLabs(LabTest::Sodium)));
    }

    #[test]
    fn implausible_values_dropped() {
        let kb = KnowledgeBase::bundled();
        let mut raw = raw_patient();
        raw.labs.push(obs(LabTest::Albumin, 50, 40.0));
        raw.labs.push(obs(LabTest::Albumin, 51, f64::NAN));
        let p = apply_landmark_filter(&raw, &LandmarkPolicy::default(), &kb).unwrap();
        assert_eq!(p.labs.iter().filter(|o| o.test == LabTest::Albumin).count(), 1);
    }

    #[test]
    fn strictness_controls_unknown_symbols() {
        let kb = KnowledgeBase::bundled();
        let mut raw = raw_patient();
        raw.mutations.push(RawMutation { symbol: "NOTAGENE".into(), detail: None, reported_day: 3 });
        assert!(matches!(
            apply_landmark_filter(&raw, &LandmarkPolicy::default(), &kb),
            Err(LandmarkError::Knowledge { .. })
        ));
        let lenient = LandmarkPolicy { strict: false, ..LandmarkPolicy::default() };
        assert_eq!(apply_landmark_filter(&raw, &lenient, &kb).unwrap().mutations.len(), 1);
    }

    #[test]
    fn default_bands() {
        let bands = PlausibilityBands::default();
        assert_eq!(bands.band(LabTest::Sodium), (110.0, 170.0));
        assert_eq!(bands.band(LabTest::CReactiveProtein), (0.0, 17.5));
        for t in LabTest::ALL {
            let s = t.spec();
            assert!(s.reference_low < s.reference_high);
        }
    }
}
