//! Report schema validation, repair, caching and persistence.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use gkc_core::curation::{
    load_report_dir, parse_provider_output, save_report_dir, validate_report, Curator, CuratorProvider, DecodingParams,
    IssueKind, MockCurator, PromptTemplate, ProviderError, GENE_DOMAIN_KEYS, GENE_KEYS, SKELETON_KEYS,
};
use gkc_core::profiles::ModalityProfile;
use gkc_core::Modality;
use proptest::prelude::*;
use serde_json::{json, Value};

const GENE_EXAMPLE: &str = include_str!("../fixtures/gene_report_example.json");

fn generic_report() -> Value {
    json!({
        "summary": "Stable laboratory picture.",
        "key_domains": {"nutritional_status": ["Albumin within range"]},
        "therapeutic_implications": [],
        "key_positive_factors": ["Normal renal function."],
        "key_negative_factors": []
    })
}

/// Every required field as a JSON pointer into the gene example.
fn gene_required_paths() -> Vec<String> {
    let mut paths: Vec<String> = GENE_KEYS.iter().map(|k| format!("/{k}")).collect();
    paths.extend(GENE_DOMAIN_KEYS.iter().map(|k| format!("/key_prognostic_domains/{k}")));
    paths
}

fn delete(value: &mut Value, pointer: &str) {
    let (parent, key) = pointer.rsplit_once('/').unwrap();
    let target = if parent.is_empty() { value } else { value.pointer_mut(parent).unwrap() };
    target.as_object_mut().unwrap().remove(key);
}

#[test]
fn gene_example_validates_in_both_modes() {
    for strict in [false, true] {
        let r = validate_report(GENE_EXAMPLE, Modality::Gene, strict).unwrap();
        assert!(r.key_positive_factors.is_empty());
        assert_eq!(r.key_negative_factors.len(), 3);
        assert_eq!(r.therapeutic_implications.len(), 4);
    }
}

#[test]
fn empty_positive_factors_accepted() {
    let mut v = generic_report();
    v["key_positive_factors"] = json!([]);
    assert!(validate_report(&v.to_string(), Modality::Lab, true).is_ok());
}

#[test]
fn syntax_errors_are_reported_as_such() {
    let err = validate_report("{\"summary\": ", Modality::Lab, false).unwrap_err();
    assert!(err.is_syntax());
}

#[test]
fn fenced_output_is_repaired_once() {
    let wrapped = format!("Here is the report:\n```json\n{}\n```", generic_report());
    assert!(validate_report(&wrapped, Modality::Med, true).is_err());
    assert!(parse_provider_output(&wrapped, Modality::Med, true).is_ok());
    assert!(parse_provider_output("no json at all", Modality::Med, true).is_err());
}

proptest! {
    #[test]
    fn deleting_any_required_gene_field_is_rejected(idx in 0usize..7, strict in any::<bool>()) {
        let paths = gene_required_paths();
        let path = &paths[idx % paths.len()];
        let mut v: Value = serde_json::from_str(GENE_EXAMPLE).unwrap();
        delete(&mut v, path);
        let err = validate_report(&v.to_string(), Modality::Gene, strict).unwrap_err();
        prop_assert!(err.issues.iter().any(|i| i.kind == IssueKind::Missing), "{path}: {err:?}");
    }

    #[test]
    fn deleting_any_skeleton_field_is_rejected(idx in 0usize..5, m in 0usize..3) {
        let modality = Modality::ALL[m];
        let mut v = generic_report();
        v.as_object_mut().unwrap().remove(SKELETON_KEYS[idx]);
        prop_assert!(validate_report(&v.to_string(), modality, false).is_err());
    }

    #[test]
    fn extra_keys_rejected_only_in_strict_mode(name in "[a-z]{3,10}", nested in any::<bool>()) {
        let mut v: Value = serde_json::from_str(GENE_EXAMPLE).unwrap();
        let target = if nested { v.pointer_mut("/key_prognostic_domains").unwrap() } else { &mut v };
        let obj = target.as_object_mut().unwrap();
        prop_assume!(!obj.contains_key(&name));
        obj.insert(name, json!("extra"));
        let raw = v.to_string();
        prop_assert!(validate_report(&raw, Modality::Gene, false).is_ok());
        let err = validate_report(&raw, Modality::Gene, true).unwrap_err();
        prop_assert!(err.issues.iter().any(|i| i.kind == IssueKind::Unexpected));
    }
}

struct Counting<P> {
    inner: P,
    calls: AtomicUsize,
}

impl<P: CuratorProvider> CuratorProvider for Counting<P> {
    fn name(&self) -> String {
        self.inner.name()
    }
    fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(prompt, params)
    }
    fn declared_deterministic(&self) -> bool {
        true
    }
}

fn lab_profile(pid: &str, albumin: &str) -> ModalityProfile {
    let text = format!("Laboratory Profile\nAlbumin (g/dL): {albumin} | reference 3.5-5.0\n");
    ModalityProfile::new(pid, Modality::Lab, text)
}

#[test]
fn one_provider_call_per_unique_prompt() {
    let provider = Arc::new(Counting { inner: MockCurator::new(), calls: AtomicUsize::new(0) });
    let curator = Curator::new(provider.clone(), true, 2);
    let tpl = PromptTemplate::default_for(Modality::Lab);
    let params = DecodingParams::default();
    let a = lab_profile("p1", "4.1, 4.0, 4.0, 3.9, 3.9");
    let b = lab_profile("p2", "4.1, 4.0, 4.0, 3.9, 3.9");
    let c = lab_profile("p3", "4.2, 3.8, 3.5, 3.3, 3.1");
    for p in [&a, &b, &c, &a, &c] {
        curator.curate(p, &tpl, &params).unwrap();
    }
    assert_eq!(provider.calls.load(Ordering::SeqCst), 2);
    assert_eq!(curator.provider_calls(), 2);

    let dir = tempfile::tempdir().unwrap();
    save_report_dir(dir.path(), &curator.entries()).unwrap();
    let warm = Curator::new(provider.clone(), true, 2);
    warm.preload(load_report_dir(dir.path()).unwrap());
    assert_eq!(warm.curate(&c, &tpl, &params).unwrap(), curator.curate(&c, &tpl, &params).unwrap());
    assert_eq!(provider.calls.load(Ordering::SeqCst), 2);
    assert_eq!(warm.provider_calls(), 0);
}

#[test]
fn changed_decoding_params_miss_the_cache() {
    let provider = Arc::new(Counting { inner: MockCurator::new(), calls: AtomicUsize::new(0) });
    let curator = Curator::new(provider.clone(), true, 1);
    let tpl = PromptTemplate::default_for(Modality::Lab);
    let p = lab_profile("p1", "4.1, 4.0, 4.0, 3.9, 3.9");
    curator.curate(&p, &tpl, &DecodingParams::default()).unwrap();
    curator.curate(&p, &tpl, &DecodingParams { max_output_tokens: 512, ..Default::default() }).unwrap();
    assert_eq!(provider.calls.load(Ordering::SeqCst), 2);
}

struct Drifting(AtomicUsize);

impl CuratorProvider for Drifting {
    fn name(&self) -> String {
        "drifting".into()
    }
    fn complete(&self, _: &str, _: &DecodingParams) -> Result<String, ProviderError> {
        let k = self.0.fetch_add(1, Ordering::SeqCst);
        let mut v = generic_report();
        v["summary"] = json!(format!("Variant {k}."));
        Ok(v.to_string())
    }
    fn declared_deterministic(&self) -> bool {
        true
    }
}

#[test]
fn drifting_provider_triggers_warning() {
    let curator = Curator::new(Arc::new(Drifting(AtomicUsize::new(0))), false, 1);
    let tpl = PromptTemplate::default_for(Modality::Lab);
    let p = lab_profile("p1", "4.1, 4.0, 4.0, 3.9, 3.9");
    curator.curate(&p, &tpl, &DecodingParams::default()).unwrap();
    assert!(curator.verify(&p, &tpl, &DecodingParams::default()).unwrap().is_some());
    assert_eq!(curator.warnings().len(), 1);
}

#[test]
fn template_must_name_required_keys() {
    let tpl = PromptTemplate::default_for(Modality::Med);
    let mut fields = serde_json::to_value(&tpl).unwrap();
    fields["output_schema_description"] = json!("Return JSON.");
    assert!(serde_json::from_value::<PromptTemplate>(fields).is_err());
}
