//! Annotation stores, HGNC alias normalization, and the drug-class map.
//!
//! All four stores are line-delimited JSON files (`genes.ann`, `drugs.ann`,
//! `aliases.map`, `classes.map`); see [`load`] for the field-by-field format.
//! A [`KnowledgeBase`] is validated in full at load and immutable afterwards.

mod load;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use load::{load_knowledge_base, KnowledgePaths, KnowledgeSources, LoadOptions};

pub const PANEL_SIZE: usize = 271;
pub const DRUG_REGISTRY_SIZE: usize = 64;
pub const ANTI_CANCER_DRUGS: usize = 38;
pub const SUPPORTIVE_DRUGS: usize = 26;
pub const DRUG_CLASS_COUNT: usize = 27;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnowledgeError {
    #[error("{file}: {message}")]
    Io { file: String, message: String },
    #[error("{file}:{line}: parse error: {message}")]
    Parse { file: String, line: usize, message: String },
    #[error("{file}:{line}: schema error: {message}")]
    Schema { file: String, line: usize, message: String },
    #[error("cardinality mismatch for {what}: expected {expected}, found {found}")]
    Cardinality { what: &'static str, expected: usize, found: usize },
    #[error("alias `{alias}` maps to both `{first}` and `{second}`")]
    AmbiguousAlias { alias: String, first: String, second: String },
    #[error("unknown gene symbol `{0}`")]
    UnknownSymbol(String),
    #[error("empty gene symbol")]
    EmptySymbol,
    #[error("unknown drug `{0}`")]
    UnknownDrug(String),
    #[error("{file}: duplicate key `{key}`")]
    Duplicate { file: String, key: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrugCategory {
    AntiCancer,
    Supportive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrugAnnotation {
    pub drug_id: String,
    pub name: String,
    pub category: DrugCategory,
    pub description: String,
    pub mechanism_of_action: String,
    pub indication: String,
    pub pharmacodynamics: String,
    pub toxicity: String,
}

impl DrugAnnotation {
    /// The five narrative fields with their profile headers, in render order.
    pub fn narrative_fields(&self) -> [(&'static str, &str); 5] {
        [
            ("Description", &self.description),
            ("Mechanism of Action", &self.mechanism_of_action),
            ("Indication", &self.indication),
            ("Pharmacodynamics", &self.pharmacodynamics),
            ("Toxicity", &self.toxicity),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneAnnotation {
    pub hgnc_symbol: String,
    pub function_summary: String,
    pub kegg_pathways: Vec<String>,
    pub go_biological_processes: Vec<String>,
    pub go_molecular_functions: Vec<String>,
}

/// Case-insensitive alias map onto canonical HGNC symbols.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AliasTable {
    aliases: BTreeMap<String, String>,
    canonical: BTreeSet<String>,
}

fn fold_symbol(raw: &str) -> String {
    raw.trim().to_ascii_uppercase()
}

impl AliasTable {
    /// Builds the table. Every canonical symbol maps to itself; an alias that
    /// names a different canonical symbol or two targets is rejected.
    pub fn new(
        canonical: impl IntoIterator<Item = String>,
        rows: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, KnowledgeError> {
        let canonical: BTreeSet<String> = canonical.into_iter().map(|s| fold_symbol(&s)).collect();
        let mut aliases: BTreeMap<String, String> = BTreeMap::new();
        for (alias, target) in rows {
            let alias = fold_symbol(&alias);
            let target = fold_symbol(&target);
            if !canonical.contains(&target) {
                return Err(KnowledgeError::UnknownSymbol(target));
            }
            if canonical.contains(&alias) && alias != target {
                return Err(KnowledgeError::AmbiguousAlias { alias: alias.clone(), first: alias, second: target });
            }
            match aliases.get(&alias) {
                Some(prev) if prev != &target => {
                    return Err(KnowledgeError::AmbiguousAlias { alias, first: prev.clone(), second: target });
                }
                _ => {
                    aliases.insert(alias, target);
                }
            }
        }
        Ok(Self { aliases, canonical })
    }

    /// Exact canonical match (after trim and case fold) wins, then alias lookup.
    pub fn normalize(&self, raw: &str) -> Result<String, KnowledgeError> {
        let folded = fold_symbol(raw);
        if folded.is_empty() {
            return Err(KnowledgeError::EmptySymbol);
        }
        if self.canonical.contains(&folded) {
            return Ok(folded);
        }
        self.aliases.get(&folded).cloned().ok_or(KnowledgeError::UnknownSymbol(raw.trim().to_string()))
    }

    pub fn is_canonical(&self, symbol: &str) -> bool {
        self.canonical.contains(symbol)
    }

    pub fn alias_count(&self) -> usize {
        self.aliases.len()
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, &str)> {
        self.aliases.iter().map(|(a, c)| (a.as_str(), c.as_str()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrugClass {
    pub class_id: String,
    pub display_name: String,
}

/// Drug to class partition over the drug registry.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DrugClassMap {
    classes: Vec<DrugClass>,
    by_drug: BTreeMap<String, usize>,
}

impl DrugClassMap {
    pub fn new(classes: Vec<(DrugClass, Vec<String>)>) -> Result<Self, KnowledgeError> {
        let mut registry = Vec::with_capacity(classes.len());
        let mut by_drug = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (idx, (class, members)) in classes.into_iter().enumerate() {
            if !seen.insert(class.class_id.clone()) {
                return Err(KnowledgeError::Duplicate { file: "classes.map".into(), key: class.class_id });
            }
            for drug in members {
                if by_drug.insert(drug.clone(), idx).is_some() {
                    return Err(KnowledgeError::Duplicate { file: "classes.map".into(), key: drug });
                }
            }
            registry.push(class);
        }
        let mut map = Self { classes: registry, by_drug };
        map.sort_registry();
        Ok(map)
    }

    // Registry order is class_id order so loading is independent of file order.
    fn sort_registry(&mut self) {
        let mut order: Vec<usize> = (0..self.classes.len()).collect();
        order.sort_by(|&a, &b| self.classes[a].class_id.cmp(&self.classes[b].class_id));
        let mut remap = vec![0; order.len()];
        for (new_idx, &old_idx) in order.iter().enumerate() {
            remap[old_idx] = new_idx;
        }
        self.classes = order.iter().map(|&i| self.classes[i].clone()).collect();
        for idx in self.by_drug.values_mut() {
            *idx = remap[*idx];
        }
    }

    pub fn resolve(&self, drug_id: &str) -> Result<&DrugClass, KnowledgeError> {
        self.by_drug
            .get(drug_id)
            .map(|&i| &self.classes[i])
            .ok_or_else(|| KnowledgeError::UnknownDrug(drug_id.to_string()))
    }

    /// Column position of a class in the 27-wide indicator block.
    pub fn class_index(&self, class_id: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.class_id == class_id)
    }

    pub fn classes(&self) -> &[DrugClass] {
        &self.classes
    }

    pub fn class(&self, class_id: &str) -> Option<&DrugClass> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    pub fn drugs(&self) -> impl Iterator<Item = &str> {
        self.by_drug.keys().map(String::as_str)
    }

    pub fn members(&self, class_id: &str) -> Vec<&str> {
        let Some(idx) = self.class_index(class_id) else {
            return Vec::new();
        };
        self.by_drug.iter().filter(|(_, &i)| i == idx).map(|(d, _)| d.as_str()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnowledgeBase {
    pub genes: BTreeMap<String, GeneAnnotation>,
    pub drugs: BTreeMap<String, DrugAnnotation>,
    pub aliases: AliasTable,
    pub classes: DrugClassMap,
    pub panel: BTreeSet<String>,
}

impl KnowledgeBase {
    /// The annotation fixtures shipped with the crate, loaded strictly.
    pub fn bundled() -> Self {
        KnowledgeSources::bundled().load(&LoadOptions::default()).expect("bundled fixtures are valid")
    }

    pub fn normalize_gene_symbol(&self, raw: &str) -> Result<String, KnowledgeError> {
        normalize_gene_symbol(raw, &self.aliases)
    }

    pub fn resolve_drug_class(&self, drug_id: &str) -> Result<&DrugClass, KnowledgeError> {
        resolve_drug_class(drug_id, &self.classes)
    }

    pub fn gene(&self, symbol: &str) -> Result<&GeneAnnotation, KnowledgeError> {
        self.genes.get(symbol).ok_or_else(|| KnowledgeError::UnknownSymbol(symbol.to_string()))
    }

    pub fn drug(&self, drug_id: &str) -> Result<&DrugAnnotation, KnowledgeError> {
        self.drugs.get(drug_id).ok_or_else(|| KnowledgeError::UnknownDrug(drug_id.to_string()))
    }

    /// Stable JSON rendering used to compare knowledge bases.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("knowledge base serializes")
    }
}

pub fn normalize_gene_symbol(raw: &str, aliases: &AliasTable) -> Result<String, KnowledgeError> {
    aliases.normalize(raw)
}

pub fn resolve_drug_class<'a>(drug_id: &str, classes: &'a DrugClassMap) -> Result<&'a DrugClass, KnowledgeError> {
    classes.resolve(drug_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_cardinalities() {
        let kb = KnowledgeBase::bundled();
        assert_eq!(kb.panel.len(), PANEL_SIZE);
        assert_eq!(kb.genes.len(), PANEL_SIZE);
        assert_eq!(kb.drugs.len(), DRUG_REGISTRY_SIZE);
        assert_eq!(kb.classes.classes().len(), DRUG_CLASS_COUNT);
    }

    #[test]
    fn normalize_examples() {
        let kb = KnowledgeBase::bundled();
        assert_eq!(kb.normalize_gene_symbol("TP53").unwrap(), "TP53");
        assert_eq!(kb.normalize_gene_symbol(" tp53 ").unwrap(), "TP53");
        assert_eq!(kb.normalize_gene_symbol("p53-like-alias").unwrap(), "TP53");
        assert_eq!(kb.normalize_gene_symbol("hdm2").unwrap(), "MDM2");
        assert!(matches!(kb.normalize_gene_symbol("NOTAGENE"), Err(KnowledgeError::UnknownSymbol(_))));
        assert!(matches!(kb.normalize_gene_symbol("   "), Err(KnowledgeError::EmptySymbol)));
    }

    #[test]
    fn two_aliases_share_one_annotation() {
        let kb = KnowledgeBase::bundled();
        let a = kb.normalize_gene_symbol("P53").unwrap();
        let b = kb.normalize_gene_symbol("TRP53").unwrap();
        assert_eq!(a, b);
        assert_eq!(kb.genes.keys().filter(|k| **k == a).count(), 1);
    }

    #[test]
    fn class_resolution() {
        let kb = KnowledgeBase::bundled();
        assert_eq!(kb.resolve_drug_class("cisplatin-fixture").unwrap().class_id, "platinum_chemo");
        assert!(matches!(kb.resolve_drug_class("aspirin"), Err(KnowledgeError::UnknownDrug(_))));
        let resolved = kb.drugs.keys().filter(|d| kb.resolve_drug_class(d).is_ok()).count();
        assert_eq!(resolved, DRUG_REGISTRY_SIZE);
    }

    #[test]
    fn classes_partition_registry() {
        let kb = KnowledgeBase::bundled();
        let mut covered = BTreeSet::new();
        for class in kb.classes.classes() {
            for drug in kb.classes.members(&class.class_id) {
                assert!(covered.insert(drug.to_string()), "{drug} in two classes");
            }
        }
        let registry: BTreeSet<String> = kb.drugs.keys().cloned().collect();
        assert_eq!(covered, registry);
    }

    #[test]
    fn alias_conflicts_fail_at_construction() {
        let canon = vec!["TP53".to_string(), "KRAS".to_string()];
        let err = AliasTable::new(canon.clone(), vec![("X".into(), "TP53".into()), ("x".into(), "KRAS".into())]);
        assert!(matches!(err, Err(KnowledgeError::AmbiguousAlias { .. })));
        let err = AliasTable::new(canon, vec![("KRAS".into(), "TP53".into())]);
        assert!(matches!(err, Err(KnowledgeError::AmbiguousAlias { .. })));
    }
}
