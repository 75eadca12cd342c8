//! Run configuration, loaded from TOML or JSON and saved with every run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use gkc_core::cohort::SyntheticConfig;
use gkc_core::curation::DecodingParams;
use gkc_core::embedding::{EmbedderConfig, EmbedderKind};
use gkc_core::eval::DEFAULT_PERMUTATIONS;
use gkc_core::eval::{default_grid, DEFAULT_FOLDS, DEFAULT_REPEATS, INNER_FOLDS};
use gkc_core::features::Strategy;
use gkc_core::learn::{Hyperparams, ModelKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CohortSource {
    Synthetic(SyntheticConfig),
    /// JSON Lines cohort file.
    Path(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CuratorKind {
    Mock,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CuratorConfig {
    pub provider: CuratorKind,
    pub strict_schema: bool,
    pub decoding: DecodingParams,
    pub max_in_flight: usize,
    /// Directory of `<modality>.json` template overrides.
    pub templates_dir: Option<PathBuf>,
}

impl Default for CuratorConfig {
    fn default() -> Self {
        Self {
            provider: CuratorKind::Mock,
            strict_schema: false,
            decoding: DecodingParams::default(),
            max_in_flight: 8,
            templates_dir: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub seed: u64,
    pub folds: usize,
    pub repeats: usize,
    pub inner_folds: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { seed: 7, folds: DEFAULT_FOLDS, repeats: DEFAULT_REPEATS, inner_folds: INNER_FOLDS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AblationConfig {
    pub strategy: Strategy,
    pub model: ModelKind,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self { strategy: Strategy::GKC, model: ModelKind::GradBoost }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttributionConfig {
    pub strategy: Strategy,
    pub model: ModelKind,
    /// Leading CV repeats whose held-out folds are permuted.
    pub repeats: usize,
    pub permutations: usize,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self { strategy: Strategy::GKC, model: ModelKind::GradBoost, repeats: 1, permutations: DEFAULT_PERMUTATIONS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub cohort: CohortSource,
    /// Directory with `genes.ann`, `drugs.ann`, `aliases.map`, `classes.map`;
    /// the bundled knowledge base when absent.
    pub knowledge_dir: Option<PathBuf>,
    pub curator: CuratorConfig,
    pub embedder: EmbedderConfig,
    pub strategies: Vec<Strategy>,
    pub models: Vec<ModelKind>,
    /// Grid overrides per model kind.
    pub grids: BTreeMap<ModelKind, Vec<Hyperparams>>,
    pub cv: CvConfig,
    pub ablation: AblationConfig,
    pub attribution: AttributionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cohort: CohortSource::Synthetic(SyntheticConfig::default()),
            knowledge_dir: None,
            curator: CuratorConfig::default(),
            embedder: EmbedderConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            models: vec![ModelKind::GradBoost],
            grids: BTreeMap::new(),
            cv: CvConfig::default(),
            ablation: AblationConfig::default(),
            attribution: AttributionConfig::default(),
        }
    }
}

/// Command-line settings that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub provider: Option<CuratorKind>,
    pub embedder: Option<EmbedderKind>,
    pub strict_schema: bool,
    pub dim: Option<usize>,
}

impl RunConfig {
    /// Reads `.toml` files as TOML and anything else as JSON.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
        if path.extension().is_some_and(|x| x == "toml") {
            toml::from_str(&text).map_err(|e| bad(e.to_string()))
        } else {
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
        }
    }

    /// `--seed` sets both the synthetic cohort seed and the CV seed.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.cv.seed = seed;
            if let CohortSource::Synthetic(cfg) = &mut self.cohort {
                cfg.seed = seed;
            }
        }
        if let Some(p) = o.provider {
            self.curator.provider = p;
        }
        if let Some(e) = o.embedder {
            self.embedder.provider = e;
        }
        if o.strict_schema {
            self.curator.strict_schema = true;
        }
        if let Some(d) = o.dim {
            self.embedder.dim = d;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        if self.strategies.is_empty() {
            return bad("at least one strategy is required");
        }
        if self.models.is_empty() {
            return bad("at least one model kind is required");
        }
        if self.cv.folds < 2 || self.cv.repeats == 0 || self.cv.inner_folds < 2 {
            return bad("cv needs folds >= 2, repeats >= 1, inner_folds >= 2");
        }
        for (kind, grid) in &self.grids {
            if grid.is_empty() {
                return Err(CliError::Config(format!("grid for {kind} is empty")));
            }
            if let Some(hp) = grid.iter().find(|hp| hp.kind() != *kind) {
                return Err(CliError::Config(format!("grid for {kind} contains a {} point", hp.kind())));
            }
        }
        self.embedder.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.curator.decoding.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self, kind: ModelKind) -> Vec<Hyperparams> {
        self.grids.get(&kind).cloned().unwrap_or_else(|| default_grid(kind))
    }

    /// Canonical JSON: fixed field order, no timestamps.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("run.toml");
        fs::write(
            &toml_path,
            "strategies = [\"ENF\", \"GKC\"]\n[cv]\nseed = 3\n[cohort.synthetic]\nn_patients = 120\n[embedder]\ndim = 64\n",
        )
        .unwrap();
        let from_toml = RunConfig::from_file(&toml_path).unwrap();
        assert_eq!(from_toml.strategies, vec![Strategy::ENF, Strategy::GKC]);
        assert_eq!(from_toml.embedder.dim, 64);
        let json_path = dir.path().join("run.json");
        fs::write(&json_path, from_toml.to_canonical_json()).unwrap();
        assert_eq!(RunConfig::from_file(&json_path).unwrap(), from_toml);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.json");
        fs::write(&p, r#"{"cv": {"sed": 3}}"#).unwrap();
        assert!(matches!(RunConfig::from_file(&p), Err(CliError::Config(_))));
    }

    #[test]
    fn seed_override_reaches_cohort() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides { seed: Some(11), ..Default::default() });
        assert_eq!(cfg.cv.seed, 11);
        let CohortSource::Synthetic(s) = &cfg.cohort else { panic!("synthetic default") };
        assert_eq!(s.seed, 11);
    }

    #[test]
    fn mismatched_grid_rejected() {
        let mut cfg = RunConfig::default();
        cfg.grids.insert(ModelKind::GradBoost, default_grid(ModelKind::LogRegEN));
        assert!(cfg.validate().is_err());
    }
}
