//! Synthetic cohorts with planted, curator-extractable risk patterns.
//!
//! Each modality has one binary risk pattern, present in about a third of
//! patients independently of the others:
//!
//! * Gene: co-occurring KRAS and MDM2 alterations. Either gene alone also
//!   appears in pattern-free patients.
//! * Med: a strong opioid prescribed together with a systemic corticosteroid.
//!   Either class alone also appears in pattern-free patients.
//! * Lab: an albumin series falling by at least 0.6 g/dL from first to last of
//!   the five most recent values; pattern-free series move by at most 0.35.
//!
//! Latent risk is `strength * sum(weight_m * pattern_m)` over the planted
//! modalities. Labels mark the `round(n * prevalence)` patients with the
//! highest risk plus standard logistic noise, so the realized prevalence is
//! exact and `strength = 0` gives labels independent of every feature.
//! Mutation details carry `noise_profile_tokens` boilerplate words.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{apply_landmark_filter, LabObservation, LabTest, LandmarkError, LandmarkPolicy, PatientRecord};
use super::{RawMedication, RawMutation, RawPatient, LANDMARK_WINDOW_DAYS, OUTCOME_HORIZON_DAYS, SERIES_LEN};
use crate::knowledge::KnowledgeBase;
use crate::seeds::{purpose, rng_for};
use crate::{Modality, ModalitySubset};

pub const PLANTED_GENES: [&str; 2] = ["KRAS", "MDM2"];
pub const PLANTED_CLASSES: [&str; 2] = ["strong_opioid", "systemic_corticosteroid"];
pub const PATTERN_RATE: f64 = 0.35;
pub const PLANTED_ALBUMIN_DROP: (f64, f64) = (0.7, 1.2);

const VARIANTS: [&str; 6] = [
    "missense variant",
    "nonsense variant",
    "frameshift deletion",
    "splice site variant",
    "amplification",
    "in-frame insertion",
];

const BOILERPLATE: [&str; 48] = [
    "reported",
    "by",
    "the",
    "institutional",
    "sequencing",
    "laboratory",
    "using",
    "a",
    "hybrid",
    "capture",
    "panel",
    "with",
    "median",
    "coverage",
    "above",
    "threshold",
    "variant",
    "allele",
    "fraction",
    "estimated",
    "from",
    "tumor",
    "specimen",
    "reviewed",
    "according",
    "to",
    "standard",
    "operating",
    "procedure",
    "and",
    "classified",
    "under",
    "current",
    "interpretation",
    "guidelines",
    "for",
    "somatic",
    "alterations",
    "in",
    "solid",
    "tumors",
    "quality",
    "metrics",
    "passed",
    "all",
    "predefined",
    "acceptance",
    "criteria",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n_patients: usize,
    pub prevalence_target: f64,
    pub planted_signal_strength: f64,
    pub noise_profile_tokens: usize,
    pub seed: u64,
    /// Modalities whose pattern contributes to risk; the others still occur
    /// at the same rate but carry no signal.
    pub planted_modalities: ModalitySubset,
    /// Relative pattern weights in Lab, Gene, Med order.
    pub modality_weights: [f64; 3],
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_patients: 184,
            prevalence_target: 0.364,
            planted_signal_strength: 3.0,
            noise_profile_tokens: 40,
            seed: 7,
            planted_modalities: ModalitySubset::FULL,
            modality_weights: [0.75, 1.25, 0.75],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid synthetic config: {0}")]
    Invalid(String),
    #[error("generated patient failed the landmark filter: {0}")]
    Landmark(#[from] LandmarkError),
}

impl SyntheticConfig {
    pub fn positives(&self) -> usize {
        (self.n_patients as f64 * self.prevalence_target).round() as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.n_patients < 2 {
            return bad("n_patients must be at least 2");
        }
        if !(self.prevalence_target > 0.0 && self.prevalence_target < 1.0) {
            return bad("prevalence_target must lie in (0, 1)");
        }
        let k = self.positives();
        if k == 0 || k == self.n_patients {
            return bad("prevalence_target leaves a single class");
        }
        if !(self.planted_signal_strength.is_finite() && self.planted_signal_strength >= 0.0) {
            return bad("planted_signal_strength must be finite and non-negative");
        }
        if self.modality_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return bad("modality_weights must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohort {
    pub patients: Vec<PatientRecord>,
    pub latent_risk: Vec<f64>,
    /// Per patient, whether each modality's pattern is present (Lab, Gene, Med).
    pub patterns: Vec<[bool; 3]>,
}

struct Pools<'a> {
    genes: Vec<&'a str>,
    aliases: BTreeMap<&'a str, Vec<&'a str>>,
    background_drugs: Vec<&'a str>,
    all_drugs: Vec<&'a str>,
    opioids: Vec<&'a str>,
    steroids: Vec<&'a str>,
}

impl<'a> Pools<'a> {
    fn new(kb: &'a KnowledgeBase) -> Result<Self, ConfigError> {
        for g in PLANTED_GENES {
            if !kb.panel.contains(g) {
                return Err(ConfigError::Invalid(format!("panel lacks {g}")));
            }
        }
        let genes = kb.panel.iter().map(String::as_str).filter(|g| !PLANTED_GENES.contains(g)).collect();
        let mut aliases: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (alias, canonical) in kb.aliases.aliases() {
            aliases.entry(canonical).or_default().push(alias);
        }
        let opioids = kb.classes.members(PLANTED_CLASSES[0]);
        let steroids = kb.classes.members(PLANTED_CLASSES[1]);
        if opioids.is_empty() || steroids.is_empty() {
            return Err(ConfigError::Invalid("class map lacks the planted drug classes".into()));
        }
        let all_drugs: Vec<&str> = kb.classes.drugs().collect();
        let background_drugs =
            all_drugs.iter().copied().filter(|d| !opioids.contains(d) && !steroids.contains(d)).collect();
        Ok(Self { genes, aliases, background_drugs, all_drugs, opioids, steroids })
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn distinct_days(rng: &mut ChaCha8Rng, count: usize, lo: i64, hi: i64) -> Vec<i64> {
    let span = (hi - lo + 1) as usize;
    let mut days: Vec<i64> =
        rand::seq::index::sample(rng, span, count.min(span)).into_iter().map(|d| lo + d as i64).collect();
    days.sort_unstable();
    days
}

fn spell_symbol(rng: &mut ChaCha8Rng, pools: &Pools, symbol: &str) -> String {
    let u: f64 = rng.random();
    match pools.aliases.get(symbol) {
        Some(aliases) if u < 0.15 => aliases.choose(rng).expect("nonempty").to_string(),
        _ if u > 0.9 => symbol.to_ascii_lowercase(),
        _ => symbol.to_string(),
    }
}

fn mutation_detail(rng: &mut ChaCha8Rng, noise_tokens: usize) -> String {
    let mut detail = VARIANTS.choose(rng).expect("nonempty").to_string();
    if noise_tokens > 0 {
        detail.push_str("; ");
        let words: Vec<&str> = (0..noise_tokens).map(|_| *BOILERPLATE.choose(rng).expect("nonempty")).collect();
        detail.push_str(&words.join(" "));
    }
    detail
}

fn gen_labs(rng: &mut ChaCha8Rng, declining: bool) -> Vec<LabObservation> {
    let mut labs = Vec::new();
    for test in LabTest::ALL {
        let s = test.spec();
        let width = s.reference_high - s.reference_low;
        if test == LabTest::Albumin {
            let days = distinct_days(rng, SERIES_LEN, 0, LANDMARK_WINDOW_DAYS);
            let base = rng.random_range(3.3..4.6);
            let total = if declining {
                -rng.random_range(PLANTED_ALBUMIN_DROP.0..PLANTED_ALBUMIN_DROP.1)
            } else {
                rng.random_range(-0.25..0.25)
            };
            for (i, day) in days.into_iter().enumerate() {
                let drift = total * i as f64 / (SERIES_LEN - 1) as f64;
                let jitter = rng.random_range(-0.05..0.05);
                labs.push(LabObservation { test, value: round2(base + drift + jitter), observed_day: day });
            }
        } else {
            let count = rng.random_range(1..=6);
            let lo = (s.reference_low - 0.25 * width).max(0.0);
            let base = rng.random_range(lo..s.reference_high + 0.25 * width);
            for day in distinct_days(rng, count, 0, LANDMARK_WINDOW_DAYS) {
                let value = (base + rng.random_range(-0.05..0.05) * width).max(0.0);
                labs.push(LabObservation { test, value: round2(value), observed_day: day });
            }
        }
        if rng.random_bool(0.2) {
            let s = test.spec();
            let value = round2(rng.random_range(s.reference_low..s.reference_high));
            labs.push(LabObservation { test, value, observed_day: rng.random_range(91..=150) });
        }
    }
    labs.shuffle(rng);
    labs
}

fn gen_mutations(rng: &mut ChaCha8Rng, pools: &Pools, planted: bool, noise_tokens: usize) -> Vec<RawMutation> {
    let count = rng.random_range(1..=5);
    let mut symbols: Vec<&str> = pools.genes.choose_multiple(rng, count).copied().collect();
    if planted {
        symbols.extend(PLANTED_GENES);
    } else {
        let u: f64 = rng.random();
        if u < 0.3 {
            symbols.push(PLANTED_GENES[0]);
        } else if u < 0.6 {
            symbols.push(PLANTED_GENES[1]);
        }
    }
    symbols.shuffle(rng);
    symbols
        .into_iter()
        .map(|sym| RawMutation {
            symbol: spell_symbol(rng, pools, sym),
            detail: Some(mutation_detail(rng, noise_tokens)),
            reported_day: rng.random_range(0..=LANDMARK_WINDOW_DAYS),
        })
        .collect()
}

fn gen_meds(rng: &mut ChaCha8Rng, pools: &Pools, planted: bool) -> Vec<RawMedication> {
    let count = rng.random_range(1..=4);
    let mut drugs: Vec<&str> = pools.background_drugs.choose_multiple(rng, count).copied().collect();
    let opioid = *pools.opioids.choose(rng).expect("nonempty");
    let steroid = *pools.steroids.choose(rng).expect("nonempty");
    if planted {
        drugs.extend([opioid, steroid]);
    } else {
        let u: f64 = rng.random();
        if u < 0.3 {
            drugs.push(opioid);
        } else if u < 0.6 {
            drugs.push(steroid);
        }
    }
    let mut meds: Vec<RawMedication> = drugs
        .into_iter()
        .map(|d| RawMedication { drug_id: d.to_string(), prescribed_day: rng.random_range(0..=LANDMARK_WINDOW_DAYS) })
        .collect();
    if rng.random_bool(0.3) {
        let d = *pools.all_drugs.choose(rng).expect("nonempty");
        meds.push(RawMedication { drug_id: d.to_string(), prescribed_day: rng.random_range(91..=180) });
    }
    meds.shuffle(rng);
    meds
}

/// Pure function of `(cfg, kb)`.
pub fn generate_synthetic_cohort(cfg: &SyntheticConfig, kb: &KnowledgeBase) -> Result<SyntheticCohort, ConfigError> {
    cfg.validate()?;
    let pools = Pools::new(kb)?;
    let n = cfg.n_patients;

    struct Draft {
        raw: RawPatient,
        patterns: [bool; 3],
    }
    let mut drafts = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = rng_for(cfg.seed, &[purpose::SYNTH, i as u64]);
        let patterns = [rng.random_bool(PATTERN_RATE), rng.random_bool(PATTERN_RATE), rng.random_bool(PATTERN_RATE)];
        let labs = gen_labs(&mut rng, patterns[Modality::Lab.index()]);
        let mutations = gen_mutations(&mut rng, &pools, patterns[Modality::Gene.index()], cfg.noise_profile_tokens);
        let meds = gen_meds(&mut rng, &pools, patterns[Modality::Med.index()]);
        let raw = RawPatient {
            patient_id: format!("SYN-{:04}", i + 1),
            diagnosis_day: 17_000 + rng.random_range(0..2_000),
            death_day: None,
            followup_end_day: 0,
            labs,
            mutations,
            meds,
        };
        drafts.push(Draft { raw, patterns });
    }

    let latent_risk: Vec<f64> = drafts
        .iter()
        .map(|d| {
            let planted: f64 = Modality::ALL
                .iter()
                .filter(|m| cfg.planted_modalities.contains(**m) && d.patterns[m.index()])
                .map(|m| cfg.modality_weights[m.index()])
                .sum();
            cfg.planted_signal_strength * planted
        })
        .collect();

    let mut label_rng = rng_for(cfg.seed, &[purpose::SYNTH, u64::MAX]);
    let noisy: Vec<f64> = latent_risk
        .iter()
        .map(|r| {
            let u: f64 = label_rng.random_range(f64::EPSILON..1.0);
            r + (u / (1.0 - u)).ln()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| noisy[b].total_cmp(&noisy[a]).then(a.cmp(&b)));
    let mut positive = vec![false; n];
    for &i in &order[..cfg.positives()] {
        positive[i] = true;
    }

    let policy = LandmarkPolicy::default();
    let mut patients = Vec::with_capacity(n);
    let mut patterns = Vec::with_capacity(n);
    for (i, mut d) in drafts.into_iter().enumerate() {
        let mut rng = rng_for(cfg.seed, &[purpose::SYNTH, i as u64, 1]);
        let landmark = d.raw.diagnosis_day + LANDMARK_WINDOW_DAYS;
        if positive[i] {
            let death = landmark + rng.random_range(0..=OUTCOME_HORIZON_DAYS);
            d.raw.death_day = Some(death);
            d.raw.followup_end_day = death;
        } else if rng.random_bool(0.5) {
            d.raw.followup_end_day = landmark + OUTCOME_HORIZON_DAYS + rng.random_range(0..=700);
        } else {
            let death = landmark + OUTCOME_HORIZON_DAYS + rng.random_range(1..=1_100);
            d.raw.death_day = Some(death);
            d.raw.followup_end_day = death;
        }
        patients.push(apply_landmark_filter(&d.raw, &policy, kb)?);
        patterns.push(d.patterns);
    }
    Ok(SyntheticCohort { patients, latent_risk, patterns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{cohort_labels, validate_cohort, write_cohort};

    #[test]
    fn exact_prevalence_and_valid() {
        let kb = KnowledgeBase::bundled();
        let cfg = SyntheticConfig::default();
        let c = generate_synthetic_cohort(&cfg, &kb).unwrap();
        assert_eq!(c.patients.len(), 184);
        let labels = cohort_labels(&c.patients).unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 67);
        let report = validate_cohort(&c.patients, &kb, &LandmarkPolicy::default());
        assert!(report.is_valid(), "{:?}", report.violations.first());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let kb = KnowledgeBase::bundled();
        let cfg = SyntheticConfig { n_patients: 40, ..SyntheticConfig::default() };
        let a = write_cohort(&generate_synthetic_cohort(&cfg, &kb).unwrap().patients);
        let b = write_cohort(&generate_synthetic_cohort(&cfg, &kb).unwrap().patients);
        assert_eq!(a, b);
        let other = SyntheticConfig { seed: 8, ..cfg };
        assert_ne!(a, write_cohort(&generate_synthetic_cohort(&other, &kb).unwrap().patients));
    }

    #[test]
    fn planted_patterns_visible_in_records() {
        let kb = KnowledgeBase::bundled();
        let c = generate_synthetic_cohort(&SyntheticConfig::default(), &kb).unwrap();
        for (p, pat) in c.patients.iter().zip(&c.patterns) {
            let genes = p.mutated_genes();
            assert_eq!(pat[1], genes.contains("KRAS") && genes.contains("MDM2"));
            let classes = p.drug_classes();
            assert_eq!(pat[2], classes.contains(PLANTED_CLASSES[0]) && classes.contains(PLANTED_CLASSES[1]));
            let alb = p.lab_series(LabTest::Albumin).unwrap();
            let change = alb[SERIES_LEN - 1] - alb[0];
            if pat[0] {
                assert!(change <= -0.6, "{change}");
            } else {
                assert!(change.abs() <= 0.36, "{change}");
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let kb = KnowledgeBase::bundled();
        for cfg in [
            SyntheticConfig { prevalence_target: 0.0, ..SyntheticConfig::default() },
            SyntheticConfig { prevalence_target: 1.0, ..SyntheticConfig::default() },
            SyntheticConfig { planted_signal_strength: -1.0, ..SyntheticConfig::default() },
            SyntheticConfig { n_patients: 1, ..SyntheticConfig::default() },
        ] {
            assert!(matches!(generate_synthetic_cohort(&cfg, &kb), Err(ConfigError::Invalid(_))));
        }
    }
}
