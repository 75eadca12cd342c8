//! Fixture loader.
//!
//! Every file is UTF-8 JSON Lines: one object per line, blank lines and lines
//! starting with `#` ignored.
//!
//! | file          | fields |
//! |---------------|--------|
//! | `genes.ann`   | `hgnc_symbol`, `function_summary`, `kegg_pathways` (list), `go_biological_processes` (list), `go_molecular_functions` (list) |
//! | `drugs.ann`   | `drug_id`, `name`, `category` (`anti_cancer` or `supportive`), `description`, `mechanism_of_action`, `indication`, `pharmacodynamics`, `toxicity` |
//! | `aliases.map` | `alias`, `symbol` |
//! | `classes.map` | `class_id`, `display_name`, `drugs` (list of drug ids) |
//!
//! All fields are required. Strict mode rejects unknown fields and enforces
//! the registry cardinalities; lenient mode drops unknown fields.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use super::*;

#[derive(Clone, Copy, Debug)]
pub struct LoadOptions {
    pub strict: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { strict: true }
    }
}

#[derive(Clone, Debug)]
pub struct KnowledgePaths {
    pub genes: PathBuf,
    pub drugs: PathBuf,
    pub aliases: PathBuf,
    pub classes: PathBuf,
}

impl KnowledgePaths {
    /// The four standard file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            genes: dir.join("genes.ann"),
            drugs: dir.join("drugs.ann"),
            aliases: dir.join("aliases.map"),
            classes: dir.join("classes.map"),
        }
    }
}

/// File contents, before parsing.
#[derive(Clone, Debug)]
pub struct KnowledgeSources {
    pub genes: String,
    pub drugs: String,
    pub aliases: String,
    pub classes: String,
}

impl KnowledgeSources {
    pub fn bundled() -> Self {
        Self {
            genes: include_str!("../../fixtures/genes.ann").to_string(),
            drugs: include_str!("../../fixtures/drugs.ann").to_string(),
            aliases: include_str!("../../fixtures/aliases.map").to_string(),
            classes: include_str!("../../fixtures/classes.map").to_string(),
        }
    }

    pub fn read(paths: &KnowledgePaths) -> Result<Self, KnowledgeError> {
        let read = |p: &Path| {
            fs::read_to_string(p)
                .map_err(|e| KnowledgeError::Io { file: p.display().to_string(), message: e.to_string() })
        };
        Ok(Self {
            genes: read(&paths.genes)?,
            drugs: read(&paths.drugs)?,
            aliases: read(&paths.aliases)?,
            classes: read(&paths.classes)?,
        })
    }

    pub fn load(&self, opts: &LoadOptions) -> Result<KnowledgeBase, KnowledgeError> {
        build(self, opts)
    }
}

pub fn load_knowledge_base(paths: &KnowledgePaths, opts: &LoadOptions) -> Result<KnowledgeBase, KnowledgeError> {
    KnowledgeSources::read(paths)?.load(opts)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneRow {
    hgnc_symbol: String,
    function_summary: String,
    kegg_pathways: Vec<String>,
    go_biological_processes: Vec<String>,
    go_molecular_functions: Vec<String>,
}
const GENE_FIELDS: &[&str] =
    &["hgnc_symbol", "function_summary", "kegg_pathways", "go_biological_processes", "go_molecular_functions"];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DrugRow {
    drug_id: String,
    name: String,
    category: DrugCategory,
    description: String,
    mechanism_of_action: String,
    indication: String,
    pharmacodynamics: String,
    toxicity: String,
}
const DRUG_FIELDS: &[&str] = &[
    "drug_id",
    "name",
    "category",
    "description",
    "mechanism_of_action",
    "indication",
    "pharmacodynamics",
    "toxicity",
];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AliasRow {
    alias: String,
    symbol: String,
}
const ALIAS_FIELDS: &[&str] = &["alias", "symbol"];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassRow {
    class_id: String,
    display_name: String,
    drugs: Vec<String>,
}
const CLASS_FIELDS: &[&str] = &["class_id", "display_name", "drugs"];

fn parse_rows<T: DeserializeOwned>(
    file: &str,
    text: &str,
    known: &[&str],
    strict: bool,
) -> Result<Vec<(usize, T)>, KnowledgeError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut value: Value = serde_json::from_str(trimmed).map_err(|e| KnowledgeError::Parse {
            file: file.to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        let schema = |message: String| KnowledgeError::Schema { file: file.to_string(), line: line_no, message };
        let Value::Object(map) = &mut value else {
            return Err(schema("expected a JSON object".into()));
        };
        if !strict {
            map.retain(|k, _| known.contains(&k.as_str()));
        }
        let row = serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;
        rows.push((line_no, row));
    }
    Ok(rows)
}

fn dedup_preserving_order(items: Vec<String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    items.into_iter().filter(|s| seen.insert(s.clone())).collect()
}

fn check_count(what: &'static str, expected: usize, found: usize) -> Result<(), KnowledgeError> {
    if expected == found {
        Ok(())
    } else {
        Err(KnowledgeError::Cardinality { what, expected, found })
    }
}

fn build(src: &KnowledgeSources, opts: &LoadOptions) -> Result<KnowledgeBase, KnowledgeError> {
    let strict = opts.strict;

    let mut genes = BTreeMap::new();
    for (line, row) in parse_rows::<GeneRow>("genes.ann", &src.genes, GENE_FIELDS, strict)? {
        let symbol = row.hgnc_symbol.trim().to_ascii_uppercase();
        if symbol.is_empty() {
            return Err(KnowledgeError::Schema { file: "genes.ann".into(), line, message: "empty hgnc_symbol".into() });
        }
        let ann = GeneAnnotation {
            hgnc_symbol: symbol.clone(),
            function_summary: row.function_summary,
            kegg_pathways: dedup_preserving_order(row.kegg_pathways),
            go_biological_processes: dedup_preserving_order(row.go_biological_processes),
            go_molecular_functions: dedup_preserving_order(row.go_molecular_functions),
        };
        if genes.insert(symbol.clone(), ann).is_some() {
            return Err(KnowledgeError::Duplicate { file: "genes.ann".into(), key: symbol });
        }
    }
    let panel: BTreeSet<String> = genes.keys().cloned().collect();

    let mut drugs = BTreeMap::new();
    for (_, row) in parse_rows::<DrugRow>("drugs.ann", &src.drugs, DRUG_FIELDS, strict)? {
        let ann = DrugAnnotation {
            drug_id: row.drug_id.clone(),
            name: row.name,
            category: row.category,
            description: row.description,
            mechanism_of_action: row.mechanism_of_action,
            indication: row.indication,
            pharmacodynamics: row.pharmacodynamics,
            toxicity: row.toxicity,
        };
        if drugs.insert(row.drug_id.clone(), ann).is_some() {
            return Err(KnowledgeError::Duplicate { file: "drugs.ann".into(), key: row.drug_id });
        }
    }

    let alias_rows = parse_rows::<AliasRow>("aliases.map", &src.aliases, ALIAS_FIELDS, strict)?;
    let aliases = AliasTable::new(panel.iter().cloned(), alias_rows.into_iter().map(|(_, r)| (r.alias, r.symbol)))?;

    let class_rows = parse_rows::<ClassRow>("classes.map", &src.classes, CLASS_FIELDS, strict)?;
    for (line, row) in &class_rows {
        for drug in &row.drugs {
            if !drugs.contains_key(drug) {
                return Err(KnowledgeError::Schema {
                    file: "classes.map".into(),
                    line: *line,
                    message: format!("class `{}` lists unknown drug `{drug}`", row.class_id),
                });
            }
        }
    }
    let classes = DrugClassMap::new(
        class_rows
            .into_iter()
            .map(|(_, r)| (DrugClass { class_id: r.class_id, display_name: r.display_name }, r.drugs))
            .collect(),
    )?;
    if let Some(unmapped) = drugs.keys().find(|d| classes.resolve(d).is_err()) {
        return Err(KnowledgeError::Schema {
            file: "classes.map".into(),
            line: 0,
            message: format!("drug `{unmapped}` has no class"),
        });
    }

    if strict {
        check_count("gene panel", PANEL_SIZE, panel.len())?;
        check_count("drug registry", DRUG_REGISTRY_SIZE, drugs.len())?;
        check_count("drug classes", DRUG_CLASS_COUNT, classes.classes().len())?;
        let anti = drugs.values().filter(|d| d.category == DrugCategory::AntiCancer).count();
        check_count("anti-cancer drugs", ANTI_CANCER_DRUGS, anti)?;
        check_count("supportive drugs", SUPPORTIVE_DRUGS, drugs.len() - anti)?;
    }

    Ok(KnowledgeBase { genes, drugs, aliases, classes, panel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn shuffle_lines(text: &str, seed: u64) -> String {
        let mut lines: Vec<&str> = text.lines().collect();
        lines.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        lines.join("\n")
    }

    #[test]
    fn missing_toxicity_is_schema_error() {
        let mut src = KnowledgeSources::bundled();
        src.drugs = src
            .drugs
            .lines()
            .map(|l| {
                if l.contains("\"cisplatin-fixture\"") {
                    l.replace("\"toxicity\"", "\"toxicity_x\"")
                } else {
                    l.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join("\n");
        let err = src.load(&LoadOptions { strict: false }).unwrap_err();
        match err {
            KnowledgeError::Schema { file, message, .. } => {
                assert_eq!(file, "drugs.ann");
                assert!(message.contains("toxicity"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_strict_vs_lenient() {
        let mut src = KnowledgeSources::bundled();
        src.aliases.push_str("\n{\"alias\": \"RAS-K\", \"symbol\": \"KRAS\", \"source\": \"manual\"}\n");
        assert!(matches!(src.load(&LoadOptions::default()), Err(KnowledgeError::Schema { .. })));
        let kb = src.load(&LoadOptions { strict: false }).unwrap();
        assert_eq!(kb.normalize_gene_symbol("ras-k").unwrap(), "KRAS");
    }

    #[test]
    fn malformed_line_reports_position() {
        let mut src = KnowledgeSources::bundled();
        src.classes = format!("{}{{not json", src.classes);
        match src.load(&LoadOptions::default()).unwrap_err() {
            KnowledgeError::Parse { file, line, .. } => {
                assert_eq!(file, "classes.map");
                assert_eq!(line, KnowledgeSources::bundled().classes.lines().count() + 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn panel_cardinality_enforced_when_strict() {
        let mut src = KnowledgeSources::bundled();
        src.genes = src.genes.lines().filter(|l| !l.contains("\"ABL1\"")).collect::<Vec<_>>().join("\n");
        src.aliases = src.aliases.lines().filter(|l| !l.contains("\"ABL1\"")).collect::<Vec<_>>().join("\n");
        assert_eq!(
            src.load(&LoadOptions::default()).unwrap_err(),
            KnowledgeError::Cardinality { what: "gene panel", expected: 271, found: 270 }
        );
        assert_eq!(src.load(&LoadOptions { strict: false }).unwrap().panel.len(), 270);
    }

    #[test]
    fn drug_in_two_classes_rejected() {
        let mut src = KnowledgeSources::bundled();
        src.classes = src.classes.replace(
            "[\"cisplatin-fixture\", \"carboplatin-fixture\"]",
            "[\"cisplatin-fixture\", \"carboplatin-fixture\", \"paclitaxel-fixture\"]",
        );
        assert!(matches!(src.load(&LoadOptions::default()), Err(KnowledgeError::Duplicate { .. })));
    }

    #[test]
    fn fixture_alias_row_is_present() {
        // Scan the raw fixture rather than the parsed table.
        let raw = KnowledgeSources::bundled().aliases;
        let row = raw.lines().find(|l| l.contains("P53-LIKE-ALIAS")).expect("alias row");
        let v: Value = serde_json::from_str(row).unwrap();
        assert_eq!(v["symbol"], "TP53");
    }

    #[test]
    fn loading_is_row_order_independent() {
        let base = KnowledgeBase::bundled().canonical_json();
        let src = KnowledgeSources::bundled();
        for seed in 0..3 {
            let shuffled = KnowledgeSources {
                genes: shuffle_lines(&src.genes, seed),
                drugs: shuffle_lines(&src.drugs, seed + 10),
                aliases: shuffle_lines(&src.aliases, seed + 20),
                classes: shuffle_lines(&src.classes, seed + 30),
            };
            assert_eq!(shuffled.load(&LoadOptions::default()).unwrap().canonical_json(), base);
        }
    }

    #[test]
    fn load_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        let src = KnowledgeSources::bundled();
        let paths = KnowledgePaths::in_dir(dir.path());
        fs::write(&paths.genes, &src.genes).unwrap();
        fs::write(&paths.drugs, &src.drugs).unwrap();
        fs::write(&paths.aliases, &src.aliases).unwrap();
        fs::write(&paths.classes, &src.classes).unwrap();
        let kb = load_knowledge_base(&paths, &LoadOptions::default()).unwrap();
        assert_eq!(kb, KnowledgeBase::bundled());
        fs::remove_file(&paths.drugs).unwrap();
        assert!(matches!(load_knowledge_base(&paths, &LoadOptions::default()), Err(KnowledgeError::Io { .. })));
    }
}
