use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing {artifact}; run `gkc {stage}` first")]
    MissingArtifact { artifact: String, stage: &'static str },
    #[error("output directory is locked by another run ({0}); remove it if no run is active")]
    Locked(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("artifact {path} is malformed: {message}")]
    Artifact { path: String, message: String },
    #[error("{0}")]
    Stage(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn artifact(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Artifact { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn stage(e: impl std::fmt::Display) -> Self {
        Self::Stage(e.to_string())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::MissingArtifact { .. } => "missing_artifact",
            Self::Locked(_) => "locked",
            Self::Config(_) => "config",
            Self::Io { .. } => "io",
            Self::Artifact { .. } => "artifact",
            Self::Stage(_) => "stage",
        }
    }

    /// One-line JSON for stderr.
    pub fn summary_json(&self, command: &str) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            status: &'static str,
            command: &'a str,
            kind: &'static str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            run_stage: Option<&'static str>,
        }
        let run_stage = match self {
            Self::MissingArtifact { stage, .. } => Some(*stage),
            _ => None,
        };
        let s = Summary { status: "error", command, kind: self.kind(), message: self.to_string(), run_stage };
        serde_json::to_string(&s).expect("summary serializes")
    }
}
