use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{label_outcome, LabTest, LandmarkPolicy, PatientRecord};
use crate::knowledge::KnowledgeBase;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    UniquePatientId,
    LandmarkDay,
    LandmarkEligibility,
    CompleteFollowup,
    ObservationWindow,
    FiniteValue,
    PlausibleValue,
    LabCompleteness,
    MutationsPresent,
    MedicationsPresent,
    PanelMembership,
    SymbolNormalization,
    DrugClassResolution,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub patient_id: String,
    pub rule: Rule,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn rules(&self) -> Vec<Rule> {
        self.violations.iter().map(|v| v.rule).collect()
    }
}

/// Checks every record invariant; never stops at the first failure.
pub fn validate_cohort(cohort: &[PatientRecord], kb: &KnowledgeBase, policy: &LandmarkPolicy) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    for p in cohort {
        let mut flag = |rule, detail: String| {
            report.violations.push(Violation { patient_id: p.patient_id.clone(), rule, detail });
        };
        if !seen.insert(p.patient_id.as_str()) {
            flag(Rule::UniquePatientId, "duplicate patient id".into());
        }
        if p.landmark_day != p.diagnosis_day + policy.window_days {
            flag(
                Rule::LandmarkDay,
                format!("landmark_day {} != diagnosis_day + {}", p.landmark_day, policy.window_days),
            );
        }
        if let Some(d) = p.death_day {
            if d < p.landmark_day {
                flag(Rule::LandmarkEligibility, format!("death_day {d} precedes landmark_day {}", p.landmark_day));
            }
        }
        if label_outcome(p, policy.horizon_days).is_err() {
            flag(Rule::CompleteFollowup, format!("follow-up ends at {}", p.followup_end_day));
        }

        let in_window = |day: i64| (0..=policy.window_days).contains(&day);
        for o in &p.labs {
            if !in_window(o.observed_day) {
                flag(Rule::ObservationWindow, format!("{} observed on day {}", o.test, o.observed_day));
            }
            if !o.value.is_finite() {
                flag(Rule::FiniteValue, format!("{} value {}", o.test, o.value));
            } else if !policy.plausibility.contains(o.test, o.value) {
                flag(Rule::PlausibleValue, format!("{} value {}", o.test, o.value));
            }
        }
        for t in LabTest::ALL {
            if !p.labs.iter().any(|o| o.test == t) {
                flag(Rule::LabCompleteness, format!("no {t} observation"));
            }
        }

        if p.mutations.is_empty() {
            flag(Rule::MutationsPresent, "no mutations".into());
        }
        for m in &p.mutations {
            if !kb.panel.contains(&m.canonical_symbol) {
                flag(Rule::PanelMembership, format!("{} not in panel", m.canonical_symbol));
            } else if kb.normalize_gene_symbol(&m.raw_symbol).as_deref() != Ok(m.canonical_symbol.as_str()) {
                flag(
                    Rule::SymbolNormalization,
                    format!("{} does not normalize to {}", m.raw_symbol, m.canonical_symbol),
                );
            }
        }

        if p.meds.is_empty() {
            flag(Rule::MedicationsPresent, "no medications".into());
        }
        for m in &p.meds {
            if !in_window(m.prescribed_day) {
                flag(Rule::ObservationWindow, format!("{} prescribed on day {}", m.drug_id, m.prescribed_day));
            }
            match kb.resolve_drug_class(&m.drug_id) {
                Ok(c) if c.class_id == m.class_id => {}
                Ok(c) => {
                    flag(Rule::DrugClassResolution, format!("{} is {}, not {}", m.drug_id, c.class_id, m.class_id))
                }
                Err(e) => flag(Rule::DrugClassResolution, e.to_string()),
            }
        }
    }
    report
}
