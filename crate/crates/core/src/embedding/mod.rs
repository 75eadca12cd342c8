//! Text embedding behind a provider contract, with a content-addressed cache.
//!
//! Vectors are cached under `(text digest, provider name, task hint)`. The
//! first vector of a run fixes the dimension; any later vector of another
//! length is an error.

mod external;
mod mock;
mod store;

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{InflightLimiter, KeyedCache};
use crate::digest::Digest256;
use crate::{layout_spans, GroupSpan, Modality};

pub use external::{ExternalEmbedder, EMBEDDER_API_KEY_ENV, EMBEDDER_ENDPOINT_ENV, EMBEDDER_MODEL_ENV};
pub use mock::{token_slot, tokenize, MockEmbedder};
pub use store::{load_embedding_dir, save_embedding_dir, EMBEDDING_MANIFEST};

pub const MIN_DIM: usize = 8;
pub const DEFAULT_MOCK_DIM: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskHint {
    Classification,
    Generic,
}

impl TaskHint {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Classification => "classification",
            Self::Generic => "generic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub source_digest: Digest256,
    pub provider: String,
    pub task_hint: TaskHint,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    Mock,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbedderConfig {
    pub provider: EmbedderKind,
    /// Mock dimension; external providers report their own.
    pub dim: usize,
    pub normalize: bool,
    pub max_in_flight: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self { provider: EmbedderKind::Mock, dim: DEFAULT_MOCK_DIM, normalize: true, max_in_flight: 8 }
    }
}

impl EmbedderConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.dim < MIN_DIM {
            return Err(EmbeddingError::Config(format!("dimension must be at least {MIN_DIM}")));
        }
        if self.max_in_flight == 0 {
            return Err(EmbeddingError::Config("max_in_flight must be >= 1".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Embedder, EmbeddingError> {
        self.validate()?;
        let provider: Arc<dyn EmbeddingProvider> = match self.provider {
            EmbedderKind::Mock => Arc::new(MockEmbedder::new(self.dim, self.normalize)),
            EmbedderKind::External => Arc::new(ExternalEmbedder::from_env(self.normalize)?),
        };
        Ok(Embedder::new(provider, self.max_in_flight))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding provider failed: {0}")]
    Provider(String),
    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embeddings come from different providers: {0} and {1}")]
    ProviderMismatch(String, String),
    #[error("provider returned non-finite values")]
    NonFinite,
    #[error("embedder configuration: {0}")]
    Config(String),
    #[error("embedding store: {0}")]
    Store(String),
}

/// An embedding backend. `name` must change whenever outputs would.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> String;
    fn embed(&self, text: &str, hint: TaskHint) -> Result<Vec<f64>, EmbeddingError>;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EmbedKey {
    pub text_digest: Digest256,
    pub provider: String,
    pub task_hint: TaskHint,
}

impl EmbedKey {
    /// File-name digest of the whole key.
    pub fn digest(&self) -> Digest256 {
        Digest256::of_parts([
            self.text_digest.as_bytes().as_slice(),
            self.provider.as_bytes(),
            self.task_hint.as_str().as_bytes(),
        ])
    }
}

/// Provider plus cache. Shareable across threads.
pub struct Embedder {
    provider: Arc<dyn EmbeddingProvider>,
    cache: KeyedCache<EmbedKey, EmbeddingVector>,
    limiter: InflightLimiter,
    dim: Mutex<Option<usize>>,
}

impl Embedder {
    pub fn new(provider: Arc<dyn EmbeddingProvider>, max_in_flight: usize) -> Self {
        Self { provider, cache: KeyedCache::new(), limiter: InflightLimiter::new(max_in_flight), dim: Mutex::new(None) }
    }

    pub fn provider_name(&self) -> String {
        self.provider.name()
    }

    /// Provider invocations so far (one per distinct key).
    pub fn provider_calls(&self) -> usize {
        self.cache.misses()
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    pub fn dimension(&self) -> Option<usize> {
        *self.dim.lock().expect("dimension lock")
    }

    fn check_dimension(&self, found: usize) -> Result<(), EmbeddingError> {
        let mut dim = self.dim.lock().expect("dimension lock");
        match *dim {
            Some(expected) if expected != found => Err(EmbeddingError::DimensionMismatch { expected, found }),
            Some(_) => Ok(()),
            None => {
                *dim = Some(found);
                Ok(())
            }
        }
    }

    pub fn key_for(&self, text: &str, hint: TaskHint) -> EmbedKey {
        EmbedKey { text_digest: Digest256::of(text), provider: self.provider.name(), task_hint: hint }
    }

    pub fn embed_text(&self, text: &str, hint: TaskHint) -> Result<EmbeddingVector, EmbeddingError> {
        if text.trim().is_empty() {
            return Err(EmbeddingError::EmptyText);
        }
        let key = self.key_for(text, hint);
        let (vector, _) = self.cache.get_or_try_insert(key.clone(), || {
            let _permit = self.limiter.acquire();
            let values = self.provider.embed(text, hint)?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::NonFinite);
            }
            Ok(EmbeddingVector {
                values,
                source_digest: key.text_digest,
                provider: key.provider.clone(),
                task_hint: hint,
            })
        })?;
        self.check_dimension(vector.dim())?;
        Ok(vector)
    }

    /// Seeds the cache with previously persisted vectors.
    pub fn preload(&self, entries: Vec<(EmbedKey, EmbeddingVector)>) -> Result<(), EmbeddingError> {
        for (key, vector) in entries {
            self.check_dimension(vector.dim())?;
            self.cache.insert(key, vector);
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(EmbedKey, EmbeddingVector)> {
        let mut entries = self.cache.entries();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        entries
    }
}

pub fn embed_text(embedder: &Embedder, text: &str, hint: TaskHint) -> Result<EmbeddingVector, EmbeddingError> {
    embedder.embed_text(text, hint)
}

/// Concatenates per-modality vectors in the given order and records spans.
pub fn concat_subset(parts: &[(Modality, &EmbeddingVector)]) -> Result<(Vec<f64>, Vec<GroupSpan>), EmbeddingError> {
    let Some((_, first)) = parts.first() else {
        return Ok((Vec::new(), Vec::new()));
    };
    for (_, v) in parts {
        if v.dim() != first.dim() {
            return Err(EmbeddingError::DimensionMismatch { expected: first.dim(), found: v.dim() });
        }
        if v.provider != first.provider {
            return Err(EmbeddingError::ProviderMismatch(first.provider.clone(), v.provider.clone()));
        }
    }
    let values = parts.iter().flat_map(|(_, v)| v.values.iter().copied()).collect();
    Ok((values, layout_spans(parts.iter().map(|(m, v)| (*m, v.dim())))))
}

/// `Lab || Gene || Med`.
pub fn concat_modalities(
    lab: &EmbeddingVector,
    gene: &EmbeddingVector,
    med: &EmbeddingVector,
) -> Result<(Vec<f64>, Vec<GroupSpan>), EmbeddingError> {
    concat_subset(&[(Modality::Lab, lab), (Modality::Gene, gene), (Modality::Med, med)])
}
