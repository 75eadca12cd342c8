//! Minimal JSON-over-HTTP client shared by the external providers.

use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

use crate::retry::Retryable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message}")]
pub struct HttpError {
    pub message: String,
    pub transient: bool,
}

impl Retryable for HttpError {
    fn is_transient(&self) -> bool {
        self.transient
    }
}

pub struct JsonClient {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl JsonClient {
    pub fn new(endpoint: String, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { agent, endpoint, api_key }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn post(&self, body: &Value) -> Result<Value, HttpError> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(classify)?;
        resp.body_mut().read_json::<Value>().map_err(classify)
    }
}

fn classify(e: ureq::Error) -> HttpError {
    let transient = match &e {
        ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
        ureq::Error::Json(_) => false,
        _ => true,
    };
    HttpError { message: e.to_string(), transient }
}

/// Reads a required environment variable.
pub fn env_required(name: &str) -> Result<String, String> {
    std::env::var(name).map_err(|_| format!("environment variable {name} is not set"))
}
