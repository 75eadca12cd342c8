//! Per-patient modality text profiles.
//!
//! Profiles are plain text without patient identifiers. Ordering rules:
//! labs in canonical test order, mutations by canonical symbol (then detail),
//! distinct drugs by `(class_id, drug_id)`. Lab values are printed with four
//! significant digits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::{LabTest, NoObservationError, PatientRecord, SERIES_LEN};
use crate::digest::Digest256;
use crate::knowledge::{KnowledgeBase, KnowledgeError};
use crate::Modality;

pub const LAB_HEADER: &str = "Laboratory Profile";
pub const GENE_HEADER: &str = "Genomic Profile";
pub const MED_HEADER: &str = "Medication Profile";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModalityProfile {
    pub patient_id: String,
    pub modality: Modality,
    pub text: String,
    pub digest: Digest256,
    pub approx_tokens: usize,
}

impl ModalityProfile {
    pub fn new(patient_id: &str, modality: Modality, text: String) -> Self {
        Self {
            patient_id: patient_id.to_string(),
            modality,
            digest: Digest256::of(&text),
            approx_tokens: text.split_whitespace().count(),
            text,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
    #[error(transparent)]
    Lab(#[from] NoObservationError),
    #[error("patient has no {0} records")]
    Empty(Modality),
}

/// `x` rounded to `sig` significant digits, printed without exponent.
pub fn format_significant(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.*}", sig.saturating_sub(1), if x.is_finite() { 0.0 } else { x });
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = sig as i32 - 1 - magnitude;
    if decimals >= 0 {
        let s = format!("{:.*}", decimals as usize, x);
        // Rounding can carry into a new digit (9.9996 -> 10.000); redo once.
        let rounded: f64 = s.parse().expect("formatted float parses");
        let m2 = rounded.abs().log10().floor() as i32;
        if m2 != magnitude && rounded != 0.0 {
            let d2 = (sig as i32 - 1 - m2).max(0) as usize;
            return format!("{:.*}", d2, rounded);
        }
        s
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    }
}

fn lab_profile(p: &PatientRecord) -> Result<String, ProfileError> {
    let mut out = String::from(LAB_HEADER);
    out.push('\n');
    for test in LabTest::ALL {
        let spec = test.spec();
        let series = p.lab_series(test)?;
        debug_assert_eq!(series.len(), SERIES_LEN);
        let values: Vec<String> = series.iter().map(|v| format_significant(*v, 4)).collect();
        let _ = writeln!(
            out,
            "{} ({}; reference {}-{}): {}",
            spec.name,
            spec.unit,
            format_significant(spec.reference_low, 4),
            format_significant(spec.reference_high, 4),
            values.join(", ")
        );
    }
    Ok(out)
}

fn gene_profile(p: &PatientRecord, kb: &KnowledgeBase) -> Result<String, ProfileError> {
    if p.mutations.is_empty() {
        return Err(ProfileError::Empty(Modality::Gene));
    }
    let mut entries: Vec<(&str, &str)> =
        p.mutations.iter().map(|m| (m.canonical_symbol.as_str(), m.detail.as_deref().unwrap_or(""))).collect();
    entries.sort_unstable();
    entries.dedup();
    let mut out = String::from(GENE_HEADER);
    out.push('\n');
    for (i, (symbol, detail)) in entries.into_iter().enumerate() {
        let ann = kb.gene(symbol)?;
        let _ = writeln!(out, "{}. Mutation Gene: {symbol}", i + 1);
        if !detail.is_empty() {
            let _ = writeln!(out, "   Variant: {detail}");
        }
        let _ = writeln!(out, "   Function: {}", ann.function_summary);
        let _ = writeln!(out, "   KEGG Pathways: {}", ann.kegg_pathways.join("; "));
        let _ = writeln!(out, "   Biological Processes: {}", ann.go_biological_processes.join("; "));
        let _ = writeln!(out, "   Molecular Functions: {}", ann.go_molecular_functions.join("; "));
    }
    Ok(out)
}

fn med_profile(p: &PatientRecord, kb: &KnowledgeBase) -> Result<String, ProfileError> {
    if p.meds.is_empty() {
        return Err(ProfileError::Empty(Modality::Med));
    }
    let mut drugs = BTreeSet::new();
    for m in &p.meds {
        let class = kb.resolve_drug_class(&m.drug_id)?;
        drugs.insert((class.class_id.as_str(), m.drug_id.as_str()));
    }
    let mut out = String::from(MED_HEADER);
    out.push('\n');
    for (i, (class_id, drug_id)) in drugs.into_iter().enumerate() {
        let ann = kb.drug(drug_id)?;
        let class = kb.classes.class(class_id).expect("resolved class exists");
        let _ = writeln!(out, "{}. Drug: {}", i + 1, ann.name);
        let _ = writeln!(out, "   Class: {}", class.display_name);
        for (header, text) in ann.narrative_fields() {
            let _ = writeln!(out, "   {header}: {text}");
        }
    }
    Ok(out)
}

pub fn build_profile(p: &PatientRecord, m: Modality, kb: &KnowledgeBase) -> Result<ModalityProfile, ProfileError> {
    let text = match m {
        Modality::Lab => lab_profile(p)?,
        Modality::Gene => gene_profile(p, kb)?,
        Modality::Med => med_profile(p, kb)?,
    };
    Ok(ModalityProfile::new(&p.patient_id, m, text))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileFailure {
    pub patient_id: String,
    pub modality: Modality,
    pub error: ProfileError,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProfileCorpus {
    pub profiles: BTreeMap<(String, Modality), ModalityProfile>,
    pub failures: Vec<ProfileFailure>,
}

impl ProfileCorpus {
    pub fn get(&self, patient_id: &str, m: Modality) -> Option<&ModalityProfile> {
        self.profiles.get(&(patient_id.to_string(), m))
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{} profile(s) failed; first: patient {} ({}): {}", .0.len(), .0[0].patient_id, .0[0].modality, .0[0].error)]
pub struct CorpusError(pub Vec<ProfileFailure>);

/// Three profiles per patient. Failures are collected; in strict mode any
/// failure fails the batch.
pub fn profile_corpus(
    cohort: &[PatientRecord],
    kb: &KnowledgeBase,
    strict: bool,
) -> Result<ProfileCorpus, CorpusError> {
    let results: Vec<(String, Modality, Result<ModalityProfile, ProfileError>)> = cohort
        .par_iter()
        .flat_map_iter(|p| Modality::ALL.into_iter().map(move |m| (p.patient_id.clone(), m, build_profile(p, m, kb))))
        .collect();
    let mut corpus = ProfileCorpus::default();
    for (patient_id, modality, r) in results {
        match r {
            Ok(profile) => {
                corpus.profiles.insert((patient_id, modality), profile);
            }
            Err(error) => corpus.failures.push(ProfileFailure { patient_id, modality, error }),
        }
    }
    if strict && !corpus.failures.is_empty() {
        return Err(CorpusError(corpus.failures));
    }
    Ok(corpus)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub patient_id: String,
    pub modality: Modality,
    pub file: String,
    pub digest: Digest256,
    pub approx_tokens: usize,
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";

pub fn profile_file_name(patient_id: &str, m: Modality) -> String {
    format!("{patient_id}.{}.txt", m.as_str())
}

/// Writes `<patient_id>.<modality>.txt` files plus a digest manifest.
pub fn write_profile_dir(dir: &Path, corpus: &ProfileCorpus) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for ((patient_id, m), profile) in &corpus.profiles {
        let file = profile_file_name(patient_id, *m);
        fs::write(dir.join(&file), &profile.text)?;
        let entry = ManifestEntry {
            patient_id: patient_id.clone(),
            modality: *m,
            file,
            digest: profile.digest,
            approx_tokens: profile.approx_tokens,
        };
        manifest.push_str(&serde_json::to_string(&entry).expect("manifest entry serializes"));
        manifest.push('\n');
    }
    fs::write(dir.join(MANIFEST_FILE), manifest)
}

/// Reloads a profile directory, re-checking every digest.
pub fn read_profile_dir(dir: &Path) -> io::Result<ProfileCorpus> {
    let manifest = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let mut corpus = ProfileCorpus::default();
    for line in manifest.lines().filter(|l| !l.trim().is_empty()) {
        let entry: ManifestEntry =
            serde_json::from_str(line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        let text = fs::read_to_string(dir.join(&entry.file))?;
        let profile = ModalityProfile::new(&entry.patient_id, entry.modality, text);
        if profile.digest != entry.digest {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("digest mismatch for {}", entry.file)));
        }
        corpus.profiles.insert((entry.patient_id, entry.modality), profile);
    }
    Ok(corpus)
}
