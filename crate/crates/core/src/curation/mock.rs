//! Rule-table curator used offline and as the test oracle.
//!
//! Reads the profile between the prompt markers, recognizes the modality
//! from the profile header, and emits a fixed verbalization for every rule
//! that fires. Gene reports use the prognostic key spelling.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use super::{extract_profile, CuratorProvider, DecodingParams, ProviderError};
use crate::cohort::LabTest;
use crate::profiles::{GENE_HEADER, LAB_HEADER, MED_HEADER};

pub const CO_MUTATION_FACTOR: &str = "Concurrent KRAS mutation and MDM2 amplification.";
pub const ALBUMIN_DECLINE_FACTOR: &str = "Declining albumin trend indicating nutritional deterioration.";
pub const OPIOID_STEROID_FACTOR: &str =
    "Concurrent strong opioid and systemic corticosteroid use suggesting high symptom burden.";
/// Albumin drop (last minus first, g/dL) at or below which the trend counts as declining.
pub const ALBUMIN_DECLINE_THRESHOLD: f64 = -0.5;

/// (symbol, activated pathway, therapy note, favorable factor)
const DRIVERS: &[(&str, &str, Option<&str>, Option<&str>)] = &[
    ("KRAS", "Ras signaling pathway", Some("Potential sensitivity to MEK or PI3K inhibitors (KRAS)"), None),
    (
        "EGFR",
        "EGFR tyrosine kinase signaling",
        Some("Potential sensitivity to EGFR tyrosine kinase inhibitors"),
        Some("Targetable EGFR alteration."),
    ),
    (
        "ALK",
        "ALK fusion signaling",
        Some("Potential sensitivity to ALK inhibitors"),
        Some("Targetable ALK alteration."),
    ),
    (
        "ROS1",
        "ROS1 fusion signaling",
        Some("Potential sensitivity to ROS1 inhibitors"),
        Some("Targetable ROS1 alteration."),
    ),
    ("BRAF", "MAPK signaling pathway (BRAF)", Some("Potential sensitivity to BRAF/MEK inhibitors"), None),
    ("MET", "MET receptor signaling", Some("Potential sensitivity to MET inhibitors"), None),
    ("RET", "RET fusion signaling", Some("Potential sensitivity to RET inhibitors"), None),
    ("PIK3CA", "PI3K-Akt signaling pathway", None, None),
    ("CDK4", "Cell cycle (CDK4)", Some("Potential sensitivity to CDK4/6 inhibitors (CDK4)"), None),
    ("REL", "NF-kB signaling pathway (REL)", None, None),
    ("RICTOR", "mTORC2 signaling (RICTOR)", None, None),
];

/// (symbol, inactivated pathway, therapy note, adverse factor)
const SUPPRESSORS: &[(&str, &str, Option<&str>, Option<&str>)] = &[
    ("MDM2", "p53 signaling pathway (MDM2 mediated)", Some("Potential resistance to therapies targeting p53"), None),
    ("TP53", "p53 signaling pathway", None, Some("TP53 mutation suggests loss of genome surveillance.")),
    ("STK11", "AMPK signaling (STK11)", None, Some("STK11 loss associated with immunotherapy resistance.")),
    (
        "KEAP1",
        "NRF2 oxidative stress response (KEAP1)",
        None,
        Some("KEAP1 alteration associated with treatment resistance."),
    ),
    (
        "ATR",
        "DNA damage repair (ATR)",
        Some("Potential sensitivity to ATR inhibitors"),
        Some("ATR mutation suggests genomic instability."),
    ),
    ("CDKN2A", "Cell cycle checkpoint (CDKN2A)", None, None),
    ("RB1", "Rb checkpoint (RB1)", None, None),
    ("PTEN", "PI3K-Akt negative regulation (PTEN)", None, None),
];

const ANTICANCER_CLASSES: &[&str] = &[
    "Platinum-Based Chemotherapy",
    "Taxanes",
    "Antifolates",
    "Nucleoside Analogs",
    "Vinca Alkaloids",
    "Topoisomerase Inhibitors",
    "PD-1/PD-L1 Checkpoint Inhibitors",
    "CTLA-4 Checkpoint Inhibitors",
    "EGFR Tyrosine Kinase Inhibitors",
    "ALK/ROS1 Inhibitors",
    "MET Inhibitors",
    "RET Inhibitors",
    "KRAS G12C Inhibitors",
    "BRAF/MEK Inhibitors",
    "Anti-Angiogenic Agents",
    "Antibody-Drug Conjugates",
    "EGFR-Directed Antibodies",
];

const TARGETED_CLASSES: &[&str] = &[
    "EGFR Tyrosine Kinase Inhibitors",
    "ALK/ROS1 Inhibitors",
    "MET Inhibitors",
    "RET Inhibitors",
    "KRAS G12C Inhibitors",
    "BRAF/MEK Inhibitors",
];

#[derive(Clone, Debug, Default)]
pub struct MockCurator;

impl MockCurator {
    pub fn new() -> Self {
        Self
    }
}

impl CuratorProvider for MockCurator {
    fn name(&self) -> String {
        "mock-rules-v1".to_string()
    }

    fn declared_deterministic(&self) -> bool {
        true
    }

    fn complete(&self, prompt: &str, _params: &DecodingParams) -> Result<String, ProviderError> {
        let profile = extract_profile(prompt);
        let header = profile.lines().next().unwrap_or("").trim();
        let doc = match header {
            GENE_HEADER => gene_report(profile),
            LAB_HEADER => lab_report(profile),
            MED_HEADER => med_report(profile),
            other => {
                return Err(ProviderError {
                    message: format!("unrecognized profile header `{other}`"),
                    transient: false,
                })
            }
        };
        Ok(serde_json::to_string_pretty(&doc).expect("report serializes"))
    }
}

fn field<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    let (_, rest) = line.trim().split_once(". ")?;
    rest.strip_prefix(label).map(str::trim)
}

/// Canonical gene symbols listed in a genomic profile.
pub fn profile_genes(profile: &str) -> BTreeSet<String> {
    profile.lines().filter_map(|l| field(l, "Mutation Gene:")).map(str::to_string).collect()
}

/// Drug class display names listed in a medication profile.
pub fn profile_drug_classes(profile: &str) -> BTreeSet<String> {
    profile.lines().filter_map(|l| l.trim().strip_prefix("Class:")).map(|c| c.trim().to_string()).collect()
}

/// Lab series by test, parsed from a laboratory profile.
pub fn profile_lab_series(profile: &str) -> Vec<(LabTest, Vec<f64>)> {
    let mut out = Vec::new();
    for line in profile.lines() {
        let Some((name, _)) = line.split_once(" (") else {
            continue;
        };
        let Some(test) = LabTest::ALL.into_iter().find(|t| t.spec().name == name.trim()) else {
            continue;
        };
        let Some((_, values)) = line.rsplit_once("): ") else {
            continue;
        };
        let series: Option<Vec<f64>> = values.split(", ").map(|v| v.trim().parse().ok()).collect();
        if let Some(series) = series {
            out.push((test, series));
        }
    }
    out
}

fn gene_report(profile: &str) -> Value {
    let genes = profile_genes(profile);
    let has = |g: &str| genes.contains(g);
    let (mut drivers, mut suppressors, mut therapy, mut pos, mut neg) = (vec![], vec![], vec![], vec![], vec![]);
    if has("KRAS") && has("MDM2") {
        neg.push(CO_MUTATION_FACTOR);
    }
    for (_, pathway, note, good) in DRIVERS.iter().filter(|d| has(d.0)) {
        drivers.push(*pathway);
        therapy.extend(*note);
        pos.extend(*good);
    }
    for (_, pathway, note, bad) in SUPPRESSORS.iter().filter(|d| has(d.0)) {
        suppressors.push(*pathway);
        therapy.extend(*note);
        neg.extend(*bad);
    }
    let summary = if has("KRAS") && has("MDM2") {
        "This patient's genomic profile suggests an aggressive tumor phenotype with a potentially poor prognosis."
    } else if !neg.is_empty() {
        "This patient's genomic profile includes adverse alterations of uncertain combined significance."
    } else if !pos.is_empty() {
        "This patient's genomic profile includes targetable alterations that may favor treatment response."
    } else {
        "This patient's genomic profile shows no dominant prognostic alteration."
    };
    json!({
        "prognostic_summary": summary,
        "key_prognostic_domains": {
            "oncogenic_driver_pathways_activated": drivers,
            "tumor_suppressor_pathways_inactivated": suppressors,
            "therapeutic_implications": therapy,
        },
        "key_positive_factors": pos,
        "key_negative_factors": neg,
    })
}

fn lab_report(profile: &str) -> Value {
    let series = profile_lab_series(profile);
    let last = |t: LabTest| series.iter().find(|s| s.0 == t).and_then(|s| s.1.last().copied());
    let (mut nutrition, mut hematology, mut inflammation) = (vec![], vec![], vec![]);
    let (mut therapy, mut pos, mut neg) = (vec![], vec![], vec![]);

    let albumin = series.iter().find(|s| s.0 == LabTest::Albumin).map(|s| s.1.as_slice()).unwrap_or(&[]);
    let declining = match (albumin.first(), albumin.last()) {
        (Some(a), Some(b)) => b - a <= ALBUMIN_DECLINE_THRESHOLD,
        _ => false,
    };
    let low_albumin = last(LabTest::Albumin).is_some_and(|v| v < LabTest::Albumin.spec().reference_low);
    if declining {
        neg.push(ALBUMIN_DECLINE_FACTOR);
        nutrition.push("Progressive albumin decline");
    }
    if low_albumin {
        neg.push("Hypoalbuminemia at landmark.");
        nutrition.push("Albumin below reference range");
    }
    if declining || low_albumin {
        therapy.push("Nutritional support assessment warranted");
    } else {
        pos.push("Preserved nutritional status.");
    }
    if last(LabTest::Hemoglobin).is_some_and(|v| v < 10.0) {
        neg.push("Anemia.");
        hematology.push("Hemoglobin below 10 g/dL");
        therapy.push("Evaluate anemia before myelosuppressive therapy");
    }
    if last(LabTest::Platelets).is_some_and(|v| v > LabTest::Platelets.spec().reference_high) {
        hematology.push("Thrombocytosis");
    }
    if let (Some(n), Some(l)) = (last(LabTest::Neutrophils), last(LabTest::Lymphocytes)) {
        if l > 0.0 && n / l > 5.0 {
            neg.push("Elevated neutrophil-to-lymphocyte ratio.");
            inflammation.push("Neutrophil-to-lymphocyte ratio above 5");
        }
    }
    if last(LabTest::CReactiveProtein).is_some_and(|v| v > 10.0) {
        neg.push("Elevated C-reactive protein suggesting systemic inflammation.");
        inflammation.push("C-reactive protein above 10 mg/L");
    }
    if last(LabTest::LactateDehydrogenase).is_some_and(|v| v > LabTest::LactateDehydrogenase.spec().reference_high) {
        neg.push("Elevated lactate dehydrogenase suggesting high tumor burden.");
        inflammation.push("Lactate dehydrogenase above reference range");
    }
    let summary = if declining {
        "Laboratory trajectory shows progressive nutritional decline."
    } else if !neg.is_empty() {
        "Laboratory profile shows isolated abnormalities."
    } else {
        "Laboratory profile is largely within reference ranges."
    };
    json!({
        "summary": summary,
        "key_domains": {
            "nutritional_status": nutrition,
            "hematologic_status": hematology,
            "inflammatory_status": inflammation,
        },
        "therapeutic_implications": therapy,
        "key_positive_factors": pos,
        "key_negative_factors": neg,
    })
}

fn med_report(profile: &str) -> Value {
    let classes = profile_drug_classes(profile);
    let has = |c: &str| classes.contains(c);
    let pair = has("Strong Opioids") && has("Systemic Corticosteroids");
    let anticancer: Vec<&str> = ANTICANCER_CLASSES.iter().copied().filter(|c| has(c)).collect();
    let supportive: Vec<&str> =
        classes.iter().map(String::as_str).filter(|c| !ANTICANCER_CLASSES.contains(c)).collect();
    let (mut therapy, mut pos, mut neg) = (vec![], vec![], vec![]);
    if pair {
        neg.push(OPIOID_STEROID_FACTOR.to_string());
    }
    for c in TARGETED_CLASSES.iter().filter(|c| has(c)) {
        pos.push(format!("Receiving targeted therapy ({c})."));
    }
    if has("Anticoagulants") {
        neg.push("Anticoagulation suggesting thromboembolic risk.".to_string());
    }
    if has("Myeloid Growth Factors") {
        neg.push("Growth factor support suggesting treatment-related myelosuppression.".to_string());
    }
    if has("PD-1/PD-L1 Checkpoint Inhibitors") || has("CTLA-4 Checkpoint Inhibitors") {
        therapy.push("Immune checkpoint blockade exposure");
        if has("Systemic Corticosteroids") {
            therapy.push("Corticosteroids may blunt immunotherapy response");
        }
    }
    let intent: Vec<String> = anticancer.iter().map(|c| format!("Active systemic therapy: {c}")).collect();
    let summary = if pair {
        "Medication pattern suggests palliative-intent management with high symptom burden."
    } else if !anticancer.is_empty() {
        "Medication pattern indicates active anticancer treatment."
    } else {
        "Medication pattern indicates supportive care only."
    };
    json!({
        "summary": summary,
        "key_domains": {
            "treatment_intent": intent,
            "supportive_care": supportive,
        },
        "therapeutic_implications": therapy,
        "key_positive_factors": pos,
        "key_negative_factors": neg,
    })
}
