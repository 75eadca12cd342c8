//! HTTP embedding provider.
//!
//! Request: `{"model": <optional>, "input": <text>, "task_type": "classification" | "generic"}`.
//! Response: `{"embedding": [f64, ...]}`.

use std::time::Duration;

use serde_json::{json, Value};

use super::{EmbeddingError, EmbeddingProvider, TaskHint};
use crate::http::{env_required, JsonClient};
use crate::retry::RetryPolicy;

pub const EMBEDDER_ENDPOINT_ENV: &str = "GKC_EMBEDDER_ENDPOINT";
pub const EMBEDDER_API_KEY_ENV: &str = "GKC_EMBEDDER_API_KEY";
pub const EMBEDDER_MODEL_ENV: &str = "GKC_EMBEDDER_MODEL";

pub struct ExternalEmbedder {
    client: JsonClient,
    model: Option<String>,
    normalize: bool,
    retry: RetryPolicy,
}

impl ExternalEmbedder {
    pub fn new(client: JsonClient, model: Option<String>, normalize: bool, retry: RetryPolicy) -> Self {
        Self { client, model, normalize, retry }
    }

    pub fn from_env(normalize: bool) -> Result<Self, EmbeddingError> {
        let endpoint = env_required(EMBEDDER_ENDPOINT_ENV).map_err(EmbeddingError::Config)?;
        let key = std::env::var(EMBEDDER_API_KEY_ENV).ok();
        let model = std::env::var(EMBEDDER_MODEL_ENV).ok();
        let client = JsonClient::new(endpoint, key, Duration::from_secs(60));
        Ok(Self::new(client, model, normalize, RetryPolicy::default()))
    }
}

fn parse_vector(resp: &Value) -> Result<Vec<f64>, EmbeddingError> {
    let arr = resp
        .get("embedding")
        .and_then(Value::as_array)
        .ok_or_else(|| EmbeddingError::Provider("response lacks an `embedding` array".into()))?;
    arr.iter()
        .map(|v| v.as_f64().ok_or_else(|| EmbeddingError::Provider("non-numeric embedding entry".into())))
        .collect()
}

impl EmbeddingProvider for ExternalEmbedder {
    fn name(&self) -> String {
        let model = self.model.as_deref().unwrap_or("default");
        format!("external:{}:{model}{}", self.client.endpoint(), if self.normalize { ":l2" } else { "" })
    }

    fn embed(&self, text: &str, hint: TaskHint) -> Result<Vec<f64>, EmbeddingError> {
        let mut body = json!({ "input": text, "task_type": hint.as_str() });
        if let Some(m) = &self.model {
            body["model"] = Value::String(m.clone());
        }
        let resp = self.retry.run(|_| self.client.post(&body)).map_err(|e| EmbeddingError::Provider(e.message))?;
        let mut v = parse_vector(&resp)?;
        if self.normalize {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_embedding_array() {
        assert_eq!(parse_vector(&json!({"embedding": [1.0, -2.5]})).unwrap(), vec![1.0, -2.5]);
        assert!(parse_vector(&json!({"data": []})).is_err());
        assert!(parse_vector(&json!({"embedding": ["x"]})).is_err());
    }
}
