//! Goal-oriented curation: persona prompts, deterministic summarization by a
//! pluggable provider, schema validation, and a content-addressed report cache.
//!
//! A report is cached under `hash(prompt ‖ provider name ‖ decoding params ‖
//! template version)`, so editing a template or switching providers never
//! serves a stale report.

mod external;
mod mock;
mod schema;
mod store;

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{InflightLimiter, KeyedCache};
use crate::digest::Digest256;
use crate::profiles::ModalityProfile;
use crate::retry::Retryable;
use crate::Modality;

pub use external::{ExternalCurator, CURATOR_API_KEY_ENV, CURATOR_ENDPOINT_ENV, CURATOR_MODEL_ENV};
pub use mock::{
    profile_drug_classes, profile_genes, profile_lab_series, MockCurator, ALBUMIN_DECLINE_FACTOR,
    ALBUMIN_DECLINE_THRESHOLD, CO_MUTATION_FACTOR, OPIOID_STEROID_FACTOR,
};
pub use schema::{
    render_report_text, repair_output, validate_report, CuratorReport, IssueKind, SchemaIssue, SchemaViolation,
    GENE_DOMAIN_KEYS, GENE_KEYS, SKELETON_KEYS,
};
pub use store::{load_report_dir, save_report_dir};

pub const PROFILE_START: &str = "=== PROFILE START ===";
pub const PROFILE_END: &str = "=== PROFILE END ===";
pub const TEMPLATE_VERSION: &str = "2024.1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CuratorError {
    #[error("template for {template} used with a {profile} profile")]
    ModalityMismatch { template: Modality, profile: Modality },
    #[error("invalid prompt template: {0}")]
    Template(String),
    #[error("invalid decoding parameters: {0}")]
    Params(String),
    #[error("curator provider failed: {0}")]
    Provider(String),
    #[error(transparent)]
    Schema(#[from] SchemaViolation),
    #[error("report store: {0}")]
    Store(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message}")]
pub struct ProviderError {
    pub message: String,
    pub transient: bool,
}

impl Retryable for ProviderError {
    fn is_transient(&self) -> bool {
        self.transient
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TemplateFields {
    modality: Modality,
    persona: String,
    task_guidance: String,
    output_schema_description: String,
    version: String,
}

/// Validated at construction; an invalid template never reaches [`build_prompt`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TemplateFields", into = "TemplateFields")]
pub struct PromptTemplate {
    fields: TemplateFields,
}

impl TryFrom<TemplateFields> for PromptTemplate {
    type Error = CuratorError;

    fn try_from(fields: TemplateFields) -> Result<Self, Self::Error> {
        PromptTemplate::new(
            fields.modality,
            &fields.persona,
            &fields.task_guidance,
            &fields.output_schema_description,
            &fields.version,
        )
    }
}

impl From<PromptTemplate> for TemplateFields {
    fn from(t: PromptTemplate) -> Self {
        t.fields
    }
}

fn required_keys(modality: Modality, schema: &str) -> &'static [&'static str] {
    if modality == Modality::Gene && schema.contains("prognostic_summary") {
        &GENE_KEYS
    } else {
        &SKELETON_KEYS
    }
}

impl PromptTemplate {
    pub fn new(
        modality: Modality,
        persona: &str,
        task_guidance: &str,
        output_schema_description: &str,
        version: &str,
    ) -> Result<Self, CuratorError> {
        if persona.trim().is_empty() {
            return Err(CuratorError::Template("persona is empty".into()));
        }
        if version.trim().is_empty() {
            return Err(CuratorError::Template("version is empty".into()));
        }
        let missing: Vec<&str> = required_keys(modality, output_schema_description)
            .iter()
            .copied()
            .filter(|k| !output_schema_description.contains(k))
            .collect();
        if !missing.is_empty() {
            return Err(CuratorError::Template(format!("schema description omits {}", missing.join(", "))));
        }
        Ok(Self {
            fields: TemplateFields {
                modality,
                persona: persona.to_string(),
                task_guidance: task_guidance.to_string(),
                output_schema_description: output_schema_description.to_string(),
                version: version.to_string(),
            },
        })
    }

    pub fn modality(&self) -> Modality {
        self.fields.modality
    }

    pub fn persona(&self) -> &str {
        &self.fields.persona
    }

    pub fn task_guidance(&self) -> &str {
        &self.fields.task_guidance
    }

    pub fn output_schema_description(&self) -> &str {
        &self.fields.output_schema_description
    }

    pub fn version(&self) -> &str {
        &self.fields.version
    }

    /// The bundled template for one modality.
    pub fn default_for(modality: Modality) -> Self {
        let (persona, guidance, schema) = match modality {
            Modality::Lab => (
                "You are a clinical laboratory medicine specialist reviewing serial blood tests of a patient with non-small cell lung cancer.",
                "Assess trajectories rather than single values: nutritional status, hematologic reserve, and systemic inflammation. \
                 Identify findings that bear on survival over the next year.",
                SKELETON_SCHEMA,
            ),
            Modality::Gene => (
                "You are a systems biologist interpreting a tumor mutation panel of a patient with non-small cell lung cancer.",
                "Reason about activated oncogenic drivers, inactivated tumor suppressor pathways, and their combined effect \
                 on tumor aggressiveness and therapy response.",
                GENE_SCHEMA,
            ),
            Modality::Med => (
                "You are a clinical pharmacologist reviewing the medications of a patient with non-small cell lung cancer.",
                "Assess treatment intent and disease burden implied by the drug classes prescribed, including supportive \
                 and symptom-directed therapy.",
                SKELETON_SCHEMA,
            ),
        };
        Self::new(modality, persona, guidance, schema, TEMPLATE_VERSION).expect("bundled template is valid")
    }
}

const SKELETON_SCHEMA: &str = "Return one JSON object with exactly these keys: \
\"summary\" (string), \"key_domains\" (object mapping a domain name to a list of strings), \
\"therapeutic_implications\" (list of strings), \"key_positive_factors\" (list of strings), \
\"key_negative_factors\" (list of strings). Lists may be empty.";

const GENE_SCHEMA: &str = "Return one JSON object with exactly these keys: \
\"prognostic_summary\" (string), \"key_prognostic_domains\" (object with the lists \
\"oncogenic_driver_pathways_activated\", \"tumor_suppressor_pathways_inactivated\", \"therapeutic_implications\"), \
\"key_positive_factors\" (list of strings), \"key_negative_factors\" (list of strings). Lists may be empty.";

const CONTEXT_ONLY: &str = "Summarize only the profile provided below. Do not add facts, values, or \
knowledge that are not stated in the profile. Focus on factors relevant to predicting one-year survival.";

/// Persona, guidance, schema instructions, then the profile verbatim between markers.
pub fn build_prompt(profile: &ModalityProfile, tpl: &PromptTemplate) -> Result<String, CuratorError> {
    if tpl.modality() != profile.modality {
        return Err(CuratorError::ModalityMismatch { template: tpl.modality(), profile: profile.modality });
    }
    Ok(format!(
        "{}\n\n{}\n\n{}\n\n{}\n\n{PROFILE_START}\n{}\n{PROFILE_END}\n",
        tpl.persona(),
        tpl.task_guidance(),
        CONTEXT_ONLY,
        tpl.output_schema_description(),
        profile.text
    ))
}

/// The profile text embedded in a prompt; the whole prompt when markers are absent.
pub fn extract_profile(prompt: &str) -> &str {
    let Some(start) = prompt.find(PROFILE_START) else {
        return prompt;
    };
    let body = &prompt[start + PROFILE_START.len()..];
    let body = body.strip_prefix('\n').unwrap_or(body);
    match body.rfind(PROFILE_END) {
        Some(end) => body[..end].strip_suffix('\n').unwrap_or(&body[..end]),
        None => body,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodingParams {
    pub temperature: f64,
    pub top_k: u32,
    pub max_output_tokens: u32,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self { temperature: 0.0, top_k: 1, max_output_tokens: 1024 }
    }
}

impl DecodingParams {
    pub fn validate(&self) -> Result<(), CuratorError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(CuratorError::Params("temperature must be finite and >= 0".into()));
        }
        if self.top_k == 0 || self.max_output_tokens == 0 {
            return Err(CuratorError::Params("top_k and max_output_tokens must be >= 1".into()));
        }
        Ok(())
    }

    fn canonical(&self) -> String {
        format!("t={:?};k={};max={}", self.temperature, self.top_k, self.max_output_tokens)
    }
}

/// A summarization backend.
pub trait CuratorProvider: Send + Sync {
    fn name(&self) -> String;
    fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String, ProviderError>;
    /// Whether identical prompts are expected to yield identical outputs.
    fn declared_deterministic(&self) -> bool;
}

pub fn cache_key(prompt: &str, provider: &str, params: &DecodingParams, tpl_version: &str) -> Digest256 {
    Digest256::of_parts([prompt.as_bytes(), provider.as_bytes(), params.canonical().as_bytes(), tpl_version.as_bytes()])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CachedReport {
    pub key: Digest256,
    pub prompt_digest: Digest256,
    pub raw_output: String,
    pub report: CuratorReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonDeterminismWarning {
    pub key: Digest256,
    pub cached_digest: Digest256,
    pub fresh_digest: Digest256,
}

/// Validates, falling back to one repair pass on failure.
pub fn parse_provider_output(raw: &str, modality: Modality, strict: bool) -> Result<CuratorReport, SchemaViolation> {
    match validate_report(raw, modality, strict) {
        Ok(r) => Ok(r),
        Err(first) => match repair_output(raw) {
            Some(fixed) if fixed != raw => validate_report(fixed, modality, strict),
            _ => Err(first),
        },
    }
}

pub struct Curator {
    provider: Arc<dyn CuratorProvider>,
    strict: bool,
    cache: KeyedCache<Digest256, CachedReport>,
    limiter: InflightLimiter,
    warnings: Mutex<Vec<NonDeterminismWarning>>,
}

impl Curator {
    pub fn new(provider: Arc<dyn CuratorProvider>, strict: bool, max_in_flight: usize) -> Self {
        Self {
            provider,
            strict,
            cache: KeyedCache::new(),
            limiter: InflightLimiter::new(max_in_flight),
            warnings: Mutex::new(Vec::new()),
        }
    }

    pub fn provider_name(&self) -> String {
        self.provider.name()
    }

    pub fn provider_calls(&self) -> usize {
        self.cache.misses()
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    fn invoke(&self, prompt: &str, params: &DecodingParams) -> Result<String, CuratorError> {
        let _permit = self.limiter.acquire();
        self.provider.complete(prompt, params).map_err(|e| CuratorError::Provider(e.message))
    }

    pub fn curate(
        &self,
        profile: &ModalityProfile,
        tpl: &PromptTemplate,
        params: &DecodingParams,
    ) -> Result<CuratorReport, CuratorError> {
        params.validate()?;
        let prompt = build_prompt(profile, tpl)?;
        let key = cache_key(&prompt, &self.provider.name(), params, tpl.version());
        let (entry, _) = self.cache.get_or_try_insert(key, || {
            let raw_output = self.invoke(&prompt, params)?;
            let report = parse_provider_output(&raw_output, profile.modality, self.strict)?;
            Ok::<_, CuratorError>(CachedReport { key, prompt_digest: Digest256::of(&prompt), raw_output, report })
        })?;
        Ok(entry.report)
    }

    /// Re-queries the provider for a cached key and records a warning when a
    /// declared-deterministic provider answers differently.
    pub fn verify(
        &self,
        profile: &ModalityProfile,
        tpl: &PromptTemplate,
        params: &DecodingParams,
    ) -> Result<Option<NonDeterminismWarning>, CuratorError> {
        let prompt = build_prompt(profile, tpl)?;
        let key = cache_key(&prompt, &self.provider.name(), params, tpl.version());
        let Some(cached) = self.cache.get(&key) else {
            return Ok(None);
        };
        if !self.provider.declared_deterministic() {
            return Ok(None);
        }
        let fresh = self.invoke(&prompt, params)?;
        let (cached_digest, fresh_digest) = (Digest256::of(&cached.raw_output), Digest256::of(&fresh));
        if cached_digest == fresh_digest {
            return Ok(None);
        }
        let warning = NonDeterminismWarning { key, cached_digest, fresh_digest };
        log::warn!("provider {} is not deterministic for key {key}", self.provider.name());
        self.warnings.lock().expect("warnings lock").push(warning.clone());
        Ok(Some(warning))
    }

    pub fn warnings(&self) -> Vec<NonDeterminismWarning> {
        self.warnings.lock().expect("warnings lock").clone()
    }

    pub fn preload(&self, entries: Vec<CachedReport>) {
        for e in entries {
            self.cache.insert(e.key, e);
        }
    }

    pub fn entries(&self) -> Vec<CachedReport> {
        let mut out: Vec<CachedReport> = self.cache.entries().into_iter().map(|(_, v)| v).collect();
        out.sort_by(|a, b| a.key.cmp(&b.key));
        out
    }
}

pub fn curate(
    curator: &Curator,
    profile: &ModalityProfile,
    tpl: &PromptTemplate,
    params: &DecodingParams,
) -> Result<CuratorReport, CuratorError> {
    curator.curate(profile, tpl, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gene_profile(text: &str) -> ModalityProfile {
        ModalityProfile::new("P1", Modality::Gene, text.to_string())
    }

    #[test]
    fn prompt_contains_persona_and_profile() {
        let p = gene_profile("Genomic Profile\n1. Mutation Gene: KRAS\n");
        let tpl = PromptTemplate::default_for(Modality::Gene);
        let prompt = build_prompt(&p, &tpl).unwrap();
        assert!(prompt.contains("systems biologist"));
        assert!(prompt.contains(&p.text));
        assert_eq!(extract_profile(&prompt), p.text);
    }

    #[test]
    fn med_template_mentions_treatment_intent() {
        assert!(PromptTemplate::default_for(Modality::Med).task_guidance().contains("treatment intent"));
    }

    #[test]
    fn template_mismatch_rejected() {
        let p = gene_profile("Genomic Profile\n");
        let tpl = PromptTemplate::default_for(Modality::Lab);
        assert!(matches!(build_prompt(&p, &tpl), Err(CuratorError::ModalityMismatch { .. })));
    }

    #[test]
    fn empty_persona_fails_at_load() {
        let json = serde_json::json!({
            "modality": "Lab", "persona": "", "task_guidance": "x",
            "output_schema_description": SKELETON_SCHEMA, "version": "1"
        });
        assert!(serde_json::from_value::<PromptTemplate>(json).is_err());
    }

    #[test]
    fn schema_description_must_name_required_keys() {
        let r = PromptTemplate::new(Modality::Med, "p", "g", "\"summary\" only", "1");
        assert!(matches!(r, Err(CuratorError::Template(_))));
    }

    #[test]
    fn repeated_curation_hits_cache() {
        let c = Curator::new(Arc::new(MockCurator::new()), true, 4);
        let p = gene_profile("Genomic Profile\n1. Mutation Gene: KRAS\n2. Mutation Gene: MDM2\n");
        let tpl = PromptTemplate::default_for(Modality::Gene);
        let first = c.curate(&p, &tpl, &DecodingParams::default()).unwrap();
        for _ in 0..10 {
            assert_eq!(c.curate(&p, &tpl, &DecodingParams::default()).unwrap(), first);
        }
        assert_eq!(c.provider_calls(), 1);
        assert_eq!(first.key_negative_factors[0], CO_MUTATION_FACTOR);
        assert_eq!(c.verify(&p, &tpl, &DecodingParams::default()).unwrap(), None);
    }
}
