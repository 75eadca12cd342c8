//! HTTP curator provider.
//!
//! Request: `{"model": <optional>, "prompt": str, "temperature": f64, "top_k": u32,
//! "max_output_tokens": u32}`. Response: `{"text": str}`.

use std::time::Duration;

use serde_json::{json, Value};

use super::{CuratorProvider, DecodingParams, ProviderError};
use crate::http::{env_required, JsonClient};
use crate::retry::RetryPolicy;

pub const CURATOR_ENDPOINT_ENV: &str = "GKC_CURATOR_ENDPOINT";
pub const CURATOR_API_KEY_ENV: &str = "GKC_CURATOR_API_KEY";
pub const CURATOR_MODEL_ENV: &str = "GKC_CURATOR_MODEL";

pub struct ExternalCurator {
    client: JsonClient,
    model: Option<String>,
    retry: RetryPolicy,
}

impl ExternalCurator {
    pub fn new(client: JsonClient, model: Option<String>, retry: RetryPolicy) -> Self {
        Self { client, model, retry }
    }

    pub fn from_env() -> Result<Self, String> {
        let endpoint = env_required(CURATOR_ENDPOINT_ENV)?;
        let key = std::env::var(CURATOR_API_KEY_ENV).ok();
        let model = std::env::var(CURATOR_MODEL_ENV).ok();
        Ok(Self::new(JsonClient::new(endpoint, key, Duration::from_secs(120)), model, RetryPolicy::default()))
    }
}

impl CuratorProvider for ExternalCurator {
    fn name(&self) -> String {
        format!("external:{}:{}", self.client.endpoint(), self.model.as_deref().unwrap_or("default"))
    }

    fn declared_deterministic(&self) -> bool {
        true
    }

    fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String, ProviderError> {
        let mut body = json!({
            "prompt": prompt,
            "temperature": params.temperature,
            "top_k": params.top_k,
            "max_output_tokens": params.max_output_tokens,
        });
        if let Some(m) = &self.model {
            body["model"] = Value::String(m.clone());
        }
        let resp = self
            .retry
            .run(|_| self.client.post(&body))
            .map_err(|e| ProviderError { message: e.message, transient: e.transient })?;
        resp.get("text")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ProviderError { message: "response lacks a `text` string".into(), transient: false })
    }
}
