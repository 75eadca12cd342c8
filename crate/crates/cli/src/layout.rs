//! Output directory layout:
//!
//! ```text
//! <out>/
//!   configs/run.json            saved RunConfig
//!   cohort/cohort.jsonl         patient records
//!   profiles/                   <patient>.<modality>.txt + manifest.jsonl
//!   reports/cache/              <key hex>.json cached curator reports
//!   reports/index.tsv           patient_id, modality, key
//!   embeddings/cache/           <key hex>.vec vectors + manifest.jsonl
//!   embeddings/index.tsv        strategy, patient_id, modality, key
//!   matrices/<strategy>.tsv     full-cohort feature matrices
//!   results/                    records, summaries, ablation, attribution
//! ```
//!
//! Files are written to `<name>.partial` and renamed, so an interrupted
//! stage never leaves a file that looks complete.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const LOCK_FILE: &str = ".gkc.lock";

#[derive(Clone, Debug)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("configs").join("run.json")
    }

    pub fn cohort(&self) -> PathBuf {
        self.root.join("cohort").join("cohort.jsonl")
    }

    pub fn profiles(&self) -> PathBuf {
        self.root.join("profiles")
    }

    pub fn report_cache(&self) -> PathBuf {
        self.root.join("reports").join("cache")
    }

    pub fn report_index(&self) -> PathBuf {
        self.root.join("reports").join("index.tsv")
    }

    pub fn embedding_cache(&self) -> PathBuf {
        self.root.join("embeddings").join("cache")
    }

    pub fn embedding_index(&self) -> PathBuf {
        self.root.join("embeddings").join("index.tsv")
    }

    pub fn matrices(&self) -> PathBuf {
        self.root.join("matrices")
    }

    pub fn results(&self) -> PathBuf {
        self.root.join("results")
    }

    pub fn result(&self, name: &str) -> PathBuf {
        self.results().join(name)
    }

    /// Path relative to the root, for messages.
    pub fn display(&self, path: &Path) -> String {
        path.strip_prefix(&self.root).unwrap_or(path).display().to_string()
    }

    pub fn require(&self, path: &Path, stage: &'static str) -> Result<(), CliError> {
        if path.exists() {
            Ok(())
        } else {
            Err(CliError::MissingArtifact { artifact: self.display(path), stage })
        }
    }

    pub fn lock(&self) -> Result<RunLock, CliError> {
        fs::create_dir_all(&self.root).map_err(|e| CliError::io(&self.root, e))?;
        let path = self.root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(RunLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Locked(path.display().to_string()))
            }
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

/// Held for the duration of a command; removes the lock file on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub fn write_atomic(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut partial = path.as_os_str().to_owned();
    partial.push(".partial");
    let partial = PathBuf::from(partial);
    fs::write(&partial, contents).map_err(|e| CliError::io(&partial, e))?;
    fs::rename(&partial, path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_lock_is_rejected_until_release() {
        let dir = tempfile::tempdir().unwrap();
        let layout = OutputLayout::new(dir.path());
        let held = layout.lock().unwrap();
        assert!(matches!(layout.lock(), Err(CliError::Locked(_))));
        drop(held);
        assert!(layout.lock().is_ok());
    }

    #[test]
    fn atomic_write_leaves_no_partial() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, "x").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "x");
        assert!(!dir.path().join("a/b.txt.partial").exists());
    }

    #[test]
    fn missing_artifact_names_stage() {
        let dir = tempfile::tempdir().unwrap();
        let layout = OutputLayout::new(dir.path());
        let err = layout.require(&layout.embedding_index(), "embed").unwrap_err();
        assert!(err.to_string().contains("gkc embed"));
        assert!(err.to_string().contains("embeddings/index.tsv"));
    }
}
