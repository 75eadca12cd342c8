//! Row-access instrumentation for leakage audits.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

/// Stage of a fold during which a row was read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    FoldStats,
    InnerTune,
    FinalFit,
    Scoring,
}

/// Set of row indices read in each phase.
#[derive(Debug, Default)]
pub struct AccessLog {
    reads: Mutex<BTreeMap<Phase, BTreeSet<usize>>>,
}

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, phase: Phase, rows: &[usize]) {
        self.reads.lock().expect("access log").entry(phase).or_default().extend(rows.iter().copied());
    }

    pub fn rows_read(&self, phase: Phase) -> BTreeSet<usize> {
        self.reads.lock().expect("access log").get(&phase).cloned().unwrap_or_default()
    }

    /// Rows in `forbidden` read during any phase other than scoring.
    pub fn leaked(&self, forbidden: &[usize]) -> BTreeSet<usize> {
        let reads = self.reads.lock().expect("access log");
        forbidden
            .iter()
            .copied()
            .filter(|r| reads.iter().any(|(phase, rows)| *phase != Phase::Scoring && rows.contains(r)))
            .collect()
    }
}

/// Optional log; a no-op when absent.
pub(crate) fn note(log: Option<&AccessLog>, phase: Phase, rows: &[usize]) {
    if let Some(log) = log {
        log.record(phase, rows);
    }
}
