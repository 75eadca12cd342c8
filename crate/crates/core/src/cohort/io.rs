//! Cohort file: JSON Lines, one [`PatientRecord`] per line.
//!
//! Top-level fields: `patient_id`, `diagnosis_day`, `landmark_day`,
//! `death_day` (integer or null), `followup_end_day`, `labs`, `mutations`,
//! `meds`. Lab items carry `test`, `value`, `observed_day`; mutation items
//! `raw_symbol`, `canonical_symbol`, `detail` (string or null); medication
//! items `drug_id`, `class_id`, `prescribed_day`. Blank lines and `#` lines are
//! skipped. Unknown fields are rejected in strict mode and dropped otherwise.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};
use thiserror::Error;

use super::PatientRecord;

#[derive(Debug, Error)]
pub enum CohortIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

const TOP: &[&str] =
    &["patient_id", "diagnosis_day", "landmark_day", "death_day", "followup_end_day", "labs", "mutations", "meds"];
const LAB: &[&str] = &["test", "value", "observed_day"];
const MUTATION: &[&str] = &["raw_symbol", "canonical_symbol", "detail"];
const MED: &[&str] = &["drug_id", "class_id", "prescribed_day"];

fn retain_known(map: &mut Map<String, Value>, known: &[&str]) {
    map.retain(|k, _| known.contains(&k.as_str()));
}

fn strip_unknown(value: &mut Value) {
    let Value::Object(top) = value else { return };
    retain_known(top, TOP);
    for (key, known) in [("labs", LAB), ("mutations", MUTATION), ("meds", MED)] {
        if let Some(Value::Array(items)) = top.get_mut(key) {
            for item in items {
                if let Value::Object(m) = item {
                    retain_known(m, known);
                }
            }
        }
    }
}

pub fn read_cohort(text: &str, strict: bool) -> Result<Vec<PatientRecord>, CohortIoError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |e: serde_json::Error| CohortIoError::Parse { line: idx + 1, message: e.to_string() };
        let record = if strict {
            serde_json::from_str(trimmed).map_err(err)?
        } else {
            let mut v: Value = serde_json::from_str(trimmed).map_err(err)?;
            strip_unknown(&mut v);
            serde_json::from_value(v).map_err(err)?
        };
        out.push(record);
    }
    Ok(out)
}

pub fn write_cohort(cohort: &[PatientRecord]) -> String {
    let mut out = String::new();
    for p in cohort {
        out.push_str(&serde_json::to_string(p).expect("patient record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_cohort_file(path: &Path, strict: bool) -> Result<Vec<PatientRecord>, CohortIoError> {
    let text =
        fs::read_to_string(path).map_err(|source| CohortIoError::Io { path: path.display().to_string(), source })?;
    read_cohort(&text, strict)
}

pub fn write_cohort_file(path: &Path, cohort: &[PatientRecord]) -> Result<(), CohortIoError> {
    let io = |source| CohortIoError::Io { path: path.display().to_string(), source };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(write_cohort(cohort).as_bytes()).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"patient_id":"p","diagnosis_day":0,"landmark_day":90,"death_day":null,"followup_end_day":500,"labs":[{"test":"albumin","value":3.9,"observed_day":4}],"mutations":[{"raw_symbol":"TP53","canonical_symbol":"TP53","detail":null}],"meds":[{"drug_id":"cisplatin-fixture","class_id":"platinum_chemo","prescribed_day":3}]}"#;

    #[test]
    fn round_trip() {
        let cohort = read_cohort(LINE, true).unwrap();
        assert_eq!(write_cohort(&cohort).trim_end(), LINE);
    }

    #[test]
    fn unknown_fields() {
        let extra = LINE.replace(r#""observed_day":4"#, r#""observed_day":4,"unit":"g/dL""#);
        assert!(matches!(read_cohort(&extra, true), Err(CohortIoError::Parse { line: 1, .. })));
        assert_eq!(read_cohort(&extra, false).unwrap(), read_cohort(LINE, true).unwrap());
        let extra_top = LINE.replacen('{', r#"{"site":"x","#, 1);
        assert!(read_cohort(&extra_top, true).is_err());
        assert!(read_cohort(&extra_top, false).is_ok());
    }
}
