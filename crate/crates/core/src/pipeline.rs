//! In-memory wiring of the stages: cohort, profiles, curated reports, and
//! per-strategy embeddings.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::cohort::{generate_synthetic_cohort, ConfigError, PatientRecord, SyntheticConfig};
use crate::curation::{render_report_text, Curator, CuratorError, CuratorReport, DecodingParams, PromptTemplate};
use crate::embedding::{Embedder, EmbeddingError, TaskHint};
use crate::features::{FeatureError, FeatureSource, Strategy, TextFeatures};
use crate::knowledge::KnowledgeBase;
use crate::profiles::{profile_corpus, CorpusError, ProfileCorpus};
use crate::{Modality, ModalitySubset};

/// Task hint used for every embedding request.
pub const EMBEDDING_HINT: TaskHint = TaskHint::Classification;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Synthetic(#[from] ConfigError),
    #[error(transparent)]
    Profiles(#[from] CorpusError),
    #[error("patient {patient_id} ({modality}): {source}")]
    Curation { patient_id: String, modality: Modality, source: CuratorError },
    #[error("patient {patient_id} ({modality}): {source}")]
    Embedding { patient_id: String, modality: Modality, source: EmbeddingError },
    #[error(transparent)]
    Features(#[from] FeatureError),
}

pub type ReportSet = BTreeMap<(String, Modality), CuratorReport>;

/// Bundled prompt templates, one per modality.
pub fn default_templates() -> BTreeMap<Modality, PromptTemplate> {
    Modality::ALL.into_iter().map(|m| (m, PromptTemplate::default_for(m))).collect()
}

pub fn curate_corpus(
    corpus: &ProfileCorpus,
    curator: &Curator,
    templates: &BTreeMap<Modality, PromptTemplate>,
    params: &DecodingParams,
) -> Result<ReportSet, PipelineError> {
    let results: Vec<_> = corpus
        .profiles
        .par_iter()
        .map(|((pid, m), profile)| {
            let tpl = templates.get(m).cloned().unwrap_or_else(|| PromptTemplate::default_for(*m));
            curator
                .curate(profile, &tpl, params)
                .map(|r| ((pid.clone(), *m), r))
                .map_err(|source| PipelineError::Curation { patient_id: pid.clone(), modality: *m, source })
        })
        .collect();
    results.into_iter().collect()
}

fn embed_texts<'a>(
    items: impl IntoParallelIterator<Item = (&'a (String, Modality), String)>,
    embedder: &Embedder,
) -> Result<TextFeatures, PipelineError> {
    let results: Vec<_> = items
        .into_par_iter()
        .map(|((pid, m), text)| {
            embedder
                .embed_text(&text, EMBEDDING_HINT)
                .map(|v| ((pid.clone(), *m), v))
                .map_err(|source| PipelineError::Embedding { patient_id: pid.clone(), modality: *m, source })
        })
        .collect();
    let vectors = results.into_iter().collect::<Result<_, _>>()?;
    Ok(TextFeatures { vectors })
}

/// CTE inputs: each modality profile embedded separately.
pub fn embed_profiles(corpus: &ProfileCorpus, embedder: &Embedder) -> Result<TextFeatures, PipelineError> {
    let items: Vec<_> = corpus.profiles.iter().map(|(k, p)| (k, p.text.clone())).collect();
    embed_texts(items, embedder)
}

/// GKC inputs: the canonical rendering of each report embedded.
pub fn embed_reports(reports: &ReportSet, embedder: &Embedder) -> Result<TextFeatures, PipelineError> {
    let items: Vec<_> = reports.iter().map(|(k, r)| (k, render_report_text(r))).collect();
    embed_texts(items, embedder)
}

/// Everything the evaluation stage needs.
pub struct Artifacts {
    pub cohort: Vec<PatientRecord>,
    pub profiles: ProfileCorpus,
    pub reports: ReportSet,
    pub cte: TextFeatures,
    pub gkc: TextFeatures,
}

impl Artifacts {
    pub fn build(
        cohort: Vec<PatientRecord>,
        kb: &KnowledgeBase,
        curator: &Curator,
        embedder: &Embedder,
    ) -> Result<Self, PipelineError> {
        let profiles = profile_corpus(&cohort, kb, true)?;
        let reports = curate_corpus(&profiles, curator, &default_templates(), &DecodingParams::default())?;
        let cte = embed_profiles(&profiles, embedder)?;
        let gkc = embed_reports(&reports, embedder)?;
        Ok(Self { cohort, profiles, reports, cte, gkc })
    }

    pub fn synthetic(
        cfg: &SyntheticConfig,
        kb: &KnowledgeBase,
        curator: &Curator,
        embedder: &Embedder,
    ) -> Result<Self, PipelineError> {
        let cohort = generate_synthetic_cohort(cfg, kb)?.patients;
        Self::build(cohort, kb, curator, embedder)
    }

    pub fn source(
        &self,
        kb: &KnowledgeBase,
        strategy: Strategy,
        subset: ModalitySubset,
    ) -> Result<FeatureSource, FeatureError> {
        let text = match strategy {
            Strategy::ENF => None,
            Strategy::CTE => Some(&self.cte),
            Strategy::GKC => Some(&self.gkc),
        };
        FeatureSource::new(&self.cohort, kb, strategy, subset, text)
    }
}
