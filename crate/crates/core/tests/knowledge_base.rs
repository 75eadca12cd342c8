use gkc_core::knowledge::{DrugCategory, KnowledgeBase, DRUG_CLASS_COUNT, DRUG_REGISTRY_SIZE, PANEL_SIZE};
use proptest::prelude::*;

#[test]
fn bundled_registry_sizes() {
    let kb = KnowledgeBase::bundled();
    assert_eq!(kb.panel.len(), PANEL_SIZE);
    assert_eq!(kb.drugs.len(), DRUG_REGISTRY_SIZE);
    assert_eq!(kb.classes.classes().len(), DRUG_CLASS_COUNT);
    let anti = kb.drugs.values().filter(|d| d.category == DrugCategory::AntiCancer).count();
    assert_eq!((anti, DRUG_REGISTRY_SIZE - anti), (38, 26));
    for drug in kb.drugs.keys() {
        kb.resolve_drug_class(drug).unwrap();
    }
}

#[test]
fn loading_is_reproducible() {
    assert_eq!(KnowledgeBase::bundled().canonical_json(), KnowledgeBase::bundled().canonical_json());
}

fn case_variants(s: &str, mask: u64, pad: bool) -> String {
    let body: String = s
        .chars()
        .enumerate()
        .map(|(i, c)| if mask >> (i % 64) & 1 == 1 { c.to_ascii_lowercase() } else { c.to_ascii_uppercase() })
        .collect();
    if pad {
        format!("  {body}\t")
    } else {
        body
    }
}

proptest! {
    #[test]
    fn canonical_symbols_normalize_to_themselves(idx in 0usize..PANEL_SIZE, mask in any::<u64>(), pad in any::<bool>()) {
        let kb = KnowledgeBase::bundled();
        let sym = kb.panel.iter().nth(idx).unwrap().clone();
        let out = kb.normalize_gene_symbol(&case_variants(&sym, mask, pad)).unwrap();
        prop_assert_eq!(&out, &sym);
        prop_assert_eq!(kb.normalize_gene_symbol(&out).unwrap(), sym);
    }

    #[test]
    fn aliases_land_on_canonical_symbols(idx in 0usize..10_000, mask in any::<u64>()) {
        let kb = KnowledgeBase::bundled();
        let n = kb.aliases.alias_count();
        prop_assume!(n > 0);
        let (alias, canonical) = kb.aliases.aliases().nth(idx % n).unwrap();
        let out = kb.normalize_gene_symbol(&case_variants(alias, mask, false)).unwrap();
        prop_assert_eq!(out.as_str(), canonical);
        prop_assert!(kb.aliases.is_canonical(&out));
    }

    #[test]
    fn unknown_symbols_rejected(s in "ZZ[0-9]{3,6}") {
        prop_assert!(KnowledgeBase::bundled().normalize_gene_symbol(&s).is_err());
    }
}
