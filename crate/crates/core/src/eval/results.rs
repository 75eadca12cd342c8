//! Result files.
//!
//! `records.tsv`: tab-separated, one row per fold with columns
//! [`RECORDS_HEADER`]; `hyperparams` is compact JSON. Floats use the shortest
//! representation that round-trips, so files are byte-stable across runs.
//!
//! `summary.json`: a [`ResultsSummary`] document.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AblationRow, AttributionResult, ComparisonResult, MetricsRecord, MetricsSummary};
use crate::learn::Hyperparams;

pub const RECORDS_HEADER: &str = "strategy\tsubset\tmodel\trepeat\tfold\thyperparams\tauc_roc\tauc_prc";

pub fn records_tsv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let hp = serde_json::to_string(&r.hyperparams).expect("hyperparams serialize");
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:?}\t{:?}\n",
            r.strategy, r.subset, r.model, r.repeat, r.fold, hp, r.auc_roc, r.auc_prc
        ));
    }
    out
}

pub fn read_records_tsv(text: &str) -> Result<Vec<MetricsRecord>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(RECORDS_HEADER) {
        return Err("records file lacks the expected header".into());
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let err = |what: &str| format!("records line {}: bad {what}", i + 2);
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 8 {
                return Err(err("column count"));
            }
            let hyperparams: Hyperparams = serde_json::from_str(f[5]).map_err(|_| err("hyperparams"))?;
            Ok(MetricsRecord {
                strategy: f[0].parse().map_err(|_| err("strategy"))?,
                subset: f[1].parse().map_err(|_| err("subset"))?,
                model: f[2].parse().map_err(|_| err("model"))?,
                repeat: f[3].parse().map_err(|_| err("repeat"))?,
                fold: f[4].parse().map_err(|_| err("fold"))?,
                hyperparams,
                auc_roc: f[6].parse().map_err(|_| err("auc_roc"))?,
                auc_prc: f[7].parse().map_err(|_| err("auc_prc"))?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub auc_roc: MetricsSummary,
    pub auc_prc: MetricsSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSummaryRow {
    pub subset: String,
    pub auc_roc: MetricsSummary,
    pub auc_prc: MetricsSummary,
}

impl From<&AblationRow> for AblationSummaryRow {
    fn from(r: &AblationRow) -> Self {
        Self { subset: r.subset.to_string(), auc_roc: r.auc_roc.clone(), auc_prc: r.auc_prc.clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsSummary {
    /// Keyed by configuration label (`strategy/subset/model`).
    pub configurations: BTreeMap<String, ConfigSummary>,
    pub comparisons: Vec<ComparisonResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ablation: Vec<AblationSummaryRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution: Option<AttributionResult>,
}

impl ResultsSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes") + "\n"
    }
}
