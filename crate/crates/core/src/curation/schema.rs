//! Report schema validation and canonical rendering.
//!
//! Two spellings are accepted. The generic skeleton, for every modality:
//!
//! ```text
//! {"summary": str, "key_domains": {name: [str]}, "therapeutic_implications": [str],
//!  "key_positive_factors": [str], "key_negative_factors": [str]}
//! ```
//!
//! and, for the gene modality only, the prognostic spelling, where
//! `key_prognostic_domains` holds the pathway lists and the therapy list:
//!
//! ```text
//! {"prognostic_summary": str,
//!  "key_prognostic_domains": {"oncogenic_driver_pathways_activated": [str],
//!                             "tumor_suppressor_pathways_inactivated": [str],
//!                             "therapeutic_implications": [str]},
//!  "key_positive_factors": [str], "key_negative_factors": [str]}
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::Modality;

pub const SKELETON_KEYS: [&str; 5] =
    ["summary", "key_domains", "therapeutic_implications", "key_positive_factors", "key_negative_factors"];
pub const GENE_KEYS: [&str; 4] =
    ["prognostic_summary", "key_prognostic_domains", "key_positive_factors", "key_negative_factors"];
pub const GENE_DOMAIN_KEYS: [&str; 3] =
    ["oncogenic_driver_pathways_activated", "tumor_suppressor_pathways_inactivated", "therapeutic_implications"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    Syntax,
    Missing,
    WrongType,
    Empty,
    Unexpected,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaIssue {
    /// JSON pointer into the document.
    pub path: String,
    pub kind: IssueKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaViolation {
    pub issues: Vec<SchemaIssue>,
}

impl SchemaViolation {
    pub fn paths(&self) -> Vec<&str> {
        self.issues.iter().map(|i| i.path.as_str()).collect()
    }

    pub fn is_syntax(&self) -> bool {
        self.issues.iter().any(|i| i.kind == IssueKind::Syntax)
    }
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.issues.iter().map(|i| format!("{:?} {}", i.kind, i.path)).collect();
        write!(f, "schema violation: {}", parts.join(", "))
    }
}

impl std::error::Error for SchemaViolation {}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CuratorReport {
    pub modality: Modality,
    pub summary: String,
    pub key_domains: BTreeMap<String, Vec<String>>,
    pub therapeutic_implications: Vec<String>,
    pub key_positive_factors: Vec<String>,
    pub key_negative_factors: Vec<String>,
    pub raw_json: String,
}

#[derive(Default)]
struct Checker {
    issues: Vec<SchemaIssue>,
}

impl Checker {
    fn issue(&mut self, path: String, kind: IssueKind) {
        self.issues.push(SchemaIssue { path, kind });
    }

    fn string(&mut self, obj: &Map<String, Value>, key: &str, path: &str) -> Option<String> {
        let p = format!("{path}/{key}");
        match obj.get(key) {
            None => self.issue(p, IssueKind::Missing),
            Some(Value::String(s)) if s.trim().is_empty() => self.issue(p, IssueKind::Empty),
            Some(Value::String(s)) => return Some(s.clone()),
            Some(_) => self.issue(p, IssueKind::WrongType),
        }
        None
    }

    fn list_value(&mut self, v: &Value, p: String) -> Option<Vec<String>> {
        let Value::Array(items) = v else {
            self.issue(p, IssueKind::WrongType);
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            match item {
                Value::String(s) => out.push(s.clone()),
                _ => self.issue(format!("{p}/{i}"), IssueKind::WrongType),
            }
        }
        (out.len() == items.len()).then_some(out)
    }

    fn list(&mut self, obj: &Map<String, Value>, key: &str, path: &str) -> Option<Vec<String>> {
        let p = format!("{path}/{key}");
        match obj.get(key) {
            None => {
                self.issue(p, IssueKind::Missing);
                None
            }
            Some(v) => self.list_value(v, p),
        }
    }

    fn object<'v>(&mut self, obj: &'v Map<String, Value>, key: &str, path: &str) -> Option<&'v Map<String, Value>> {
        let p = format!("{path}/{key}");
        match obj.get(key) {
            None => self.issue(p, IssueKind::Missing),
            Some(Value::Object(m)) => return Some(m),
            Some(_) => self.issue(p, IssueKind::WrongType),
        }
        None
    }

    fn extras(&mut self, obj: &Map<String, Value>, allowed: &[&str], path: &str) {
        for key in obj.keys().filter(|k| !allowed.contains(&k.as_str())) {
            self.issue(format!("{path}/{key}"), IssueKind::Unexpected);
        }
    }
}

fn uses_gene_spelling(obj: &Map<String, Value>) -> bool {
    obj.contains_key("prognostic_summary") || obj.contains_key("key_prognostic_domains")
}

/// Parses and validates one raw provider output. `strict` rejects keys
/// outside the schema.
pub fn validate_report(raw: &str, modality: Modality, strict: bool) -> Result<CuratorReport, SchemaViolation> {
    let value: Value = serde_json::from_str(raw).map_err(|e| SchemaViolation {
        issues: vec![SchemaIssue {
            path: format!("(line {}, column {})", e.line(), e.column()),
            kind: IssueKind::Syntax,
        }],
    })?;
    let Value::Object(obj) = value else {
        return Err(SchemaViolation { issues: vec![SchemaIssue { path: String::new(), kind: IssueKind::WrongType }] });
    };
    let mut c = Checker::default();
    let positives = c.list(&obj, "key_positive_factors", "");
    let negatives = c.list(&obj, "key_negative_factors", "");

    let (summary, domains, therapy) = if modality == Modality::Gene && uses_gene_spelling(&obj) {
        let summary = c.string(&obj, "prognostic_summary", "");
        let mut domains = Some(BTreeMap::new());
        let mut therapy = None;
        if let Some(d) = c.object(&obj, "key_prognostic_domains", "") {
            let path = "/key_prognostic_domains";
            therapy = c.list(d, "therapeutic_implications", path);
            for key in &GENE_DOMAIN_KEYS[..2] {
                match (c.list(d, key, path), domains.as_mut()) {
                    (Some(items), Some(map)) => {
                        map.insert(key.to_string(), items);
                    }
                    _ => domains = None,
                }
            }
            if strict {
                c.extras(d, &GENE_DOMAIN_KEYS, path);
            }
        }
        if strict {
            c.extras(&obj, &GENE_KEYS, "");
        }
        (summary, domains, therapy)
    } else {
        let summary = c.string(&obj, "summary", "");
        let therapy = c.list(&obj, "therapeutic_implications", "");
        let mut domains = None;
        if let Some(d) = c.object(&obj, "key_domains", "") {
            let mut map = BTreeMap::new();
            for (name, v) in d {
                if let Some(items) = c.list_value(v, format!("/key_domains/{name}")) {
                    map.insert(name.clone(), items);
                }
            }
            domains = Some(map);
        }
        if strict {
            c.extras(&obj, &SKELETON_KEYS, "");
        }
        (summary, domains, therapy)
    };

    match (summary, domains, therapy, positives, negatives) {
        (Some(summary), Some(key_domains), Some(therapeutic_implications), Some(pos), Some(neg))
            if c.issues.is_empty() =>
        {
            Ok(CuratorReport {
                modality,
                summary,
                key_domains,
                therapeutic_implications,
                key_positive_factors: pos,
                key_negative_factors: neg,
                raw_json: raw.to_string(),
            })
        }
        _ => Err(SchemaViolation { issues: c.issues }),
    }
}

/// The single repair pass: keeps the text between the first `{` and the last
/// `}`, which drops code fences and surrounding prose.
pub fn repair_output(raw: &str) -> Option<&str> {
    let start = raw.find('{')?;
    let end = raw.rfind('}')?;
    (end > start).then(|| &raw[start..=end])
}

fn section(out: &mut String, header: &str, items: &[String]) {
    if items.is_empty() {
        let _ = writeln!(out, "{header}: none");
    } else {
        let _ = writeln!(out, "{header}:");
        for item in items {
            let _ = writeln!(out, "- {item}");
        }
    }
}

/// Canonical flat text of a report; this is what gets embedded.
pub fn render_report_text(r: &CuratorReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "SUMMARY: {}", r.summary.trim());
    if r.key_domains.is_empty() {
        out.push_str("KEY DOMAINS: none\n");
    } else {
        out.push_str("KEY DOMAINS:\n");
        for (name, items) in &r.key_domains {
            let label = name.replace('_', " ");
            if items.is_empty() {
                let _ = writeln!(out, "- {label}: none");
            } else {
                let _ = writeln!(out, "- {label}: {}", items.join("; "));
            }
        }
    }
    section(&mut out, "THERAPEUTIC IMPLICATIONS", &r.therapeutic_implications);
    section(&mut out, "KEY POSITIVE FACTORS", &r.key_positive_factors);
    section(&mut out, "KEY NEGATIVE FACTORS", &r.key_negative_factors);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = include_str!("../../fixtures/gene_report_example.json");

    #[test]
    fn prognostic_spelling_maps_onto_skeleton() {
        let r = validate_report(EXAMPLE, Modality::Gene, true).unwrap();
        assert_eq!(r.key_negative_factors.len(), 3);
        assert_eq!(r.key_negative_factors[0], "Concurrent KRAS mutation and MDM2 amplification.");
        assert!(r.key_positive_factors.is_empty());
        assert_eq!(r.therapeutic_implications.len(), 4);
        assert_eq!(r.key_domains["oncogenic_driver_pathways_activated"].len(), 5);
        assert!(render_report_text(&r).contains("Ras signaling pathway"));
        assert!(render_report_text(&r).contains("KEY POSITIVE FACTORS: none"));
    }

    #[test]
    fn prognostic_spelling_is_gene_only() {
        let err = validate_report(EXAMPLE, Modality::Lab, false).unwrap_err();
        assert!(err.paths().contains(&"/summary"));
    }

    #[test]
    fn empty_summary_rejected() {
        let doc = r#"{"summary": " ", "key_domains": {}, "therapeutic_implications": [],
            "key_positive_factors": [], "key_negative_factors": []}"#;
        let err = validate_report(doc, Modality::Med, true).unwrap_err();
        assert_eq!(err.issues, vec![SchemaIssue { path: "/summary".into(), kind: IssueKind::Empty }]);
    }

    #[test]
    fn missing_negatives_reported_by_path() {
        let doc = r#"{"summary": "x", "key_domains": {}, "therapeutic_implications": [], "key_positive_factors": []}"#;
        let err = validate_report(doc, Modality::Lab, true).unwrap_err();
        assert_eq!(err.paths(), vec!["/key_negative_factors"]);
    }

    #[test]
    fn repair_strips_fences_and_prose() {
        let raw = "Here you go:\n```json\n{\"a\": {\"b\": 1}}\n```\nThanks";
        assert_eq!(repair_output(raw), Some("{\"a\": {\"b\": 1}}"));
        assert_eq!(repair_output("no json"), None);
    }
}
