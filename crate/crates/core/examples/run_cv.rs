//! Synthetic cohort (seed 7), mock curator and embedder, GradBoost with the
//! default grid: mean AUC per strategy and paired Wilcoxon tests.

use std::sync::Arc;
use std::time::Instant;

use gkc_core::cohort::SyntheticConfig;
use gkc_core::curation::{Curator, MockCurator};
use gkc_core::embedding::EmbedderConfig;
use gkc_core::eval::{
    compare_records, default_grid, make_cv_plan, run_cv, CvOptions, Metric, DEFAULT_FOLDS, DEFAULT_REPEATS,
};
use gkc_core::features::Strategy;
use gkc_core::knowledge::KnowledgeBase;
use gkc_core::learn::ModelKind;
use gkc_core::pipeline::Artifacts;
use gkc_core::ModalitySubset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind: ModelKind = std::env::args().nth(1).map_or(Ok(ModelKind::GradBoost), |s| s.parse())?;
    let kb = KnowledgeBase::bundled();
    let cfg = SyntheticConfig::default();
    let curator = Curator::new(Arc::new(MockCurator::new()), true, 8);
    let embedder = EmbedderConfig::default().build()?;
    let t0 = Instant::now();
    let art = Artifacts::synthetic(&cfg, &kb, &curator, &embedder)?;
    println!("artifacts built in {:.1?}", t0.elapsed());

    let labels = gkc_core::cohort::cohort_labels(&art.cohort)?;
    let plan = make_cv_plan(&labels, DEFAULT_FOLDS, DEFAULT_REPEATS, cfg.seed)?;
    let grid = default_grid(kind);
    let mut runs = Vec::new();
    for strategy in Strategy::ALL {
        let t = Instant::now();
        let source = art.source(&kb, strategy, ModalitySubset::FULL)?;
        let run = run_cv(&plan, &source, kind, &grid, &CvOptions::default())?;
        let mean = run.records.iter().map(|r| r.auc_roc).sum::<f64>() / run.records.len() as f64;
        let prc = run.records.iter().map(|r| r.auc_prc).sum::<f64>() / run.records.len() as f64;
        println!(
            "{strategy}: mean AUC-ROC {mean:.4}, AUC-PRC {prc:.4} ({} folds, {:.1?})",
            run.records.len(),
            t.elapsed()
        );
        runs.push(run.records);
    }
    for (a, b) in [(2, 0), (2, 1), (1, 0)] {
        let c = compare_records(&runs[a], &runs[b], Metric::AucRoc)?;
        println!("{} vs {}: W = {}, p = {:.3e}", c.a, c.b, c.test.w, c.test.p_value);
    }
    println!("total {:.1?}", t0.elapsed());
    Ok(())
}
