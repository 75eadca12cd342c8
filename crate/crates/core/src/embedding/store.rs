//! On-disk vector cache: one `<key digest>.vec` file of little-endian f64s
//! per entry plus a JSONL manifest carrying the keys.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbedKey, EmbeddingError, EmbeddingVector};

pub const EMBEDDING_MANIFEST: &str = "manifest.jsonl";

#[derive(Serialize, Deserialize)]
struct Row {
    file: String,
    key: EmbedKey,
    dim: usize,
}

fn store_err(path: &Path, e: impl std::fmt::Display) -> EmbeddingError {
    EmbeddingError::Store(format!("{}: {e}", path.display()))
}

pub fn save_embedding_dir(dir: &Path, entries: &[(EmbedKey, EmbeddingVector)]) -> Result<(), EmbeddingError> {
    fs::create_dir_all(dir).map_err(|e| store_err(dir, e))?;
    let mut manifest = String::new();
    let mut sorted: Vec<&(EmbedKey, EmbeddingVector)> = entries.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for (key, vector) in sorted {
        let file = format!("{}.vec", key.digest().to_hex());
        let bytes: Vec<u8> = vector.values.iter().flat_map(|v| v.to_le_bytes()).collect();
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| store_err(&path, e))?;
        let row = Row { file, key: key.clone(), dim: vector.dim() };
        manifest.push_str(&serde_json::to_string(&row).expect("manifest row serializes"));
        manifest.push('\n');
    }
    let path = dir.join(EMBEDDING_MANIFEST);
    fs::write(&path, manifest).map_err(|e| store_err(&path, e))
}

/// Missing directories load as empty.
pub fn load_embedding_dir(dir: &Path) -> Result<Vec<(EmbedKey, EmbeddingVector)>, EmbeddingError> {
    let path = dir.join(EMBEDDING_MANIFEST);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(&path).map_err(|e| store_err(&path, e))?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row: Row = serde_json::from_str(line).map_err(|e| store_err(&path, e))?;
        let vpath = dir.join(&row.file);
        let bytes = fs::read(&vpath).map_err(|e| store_err(&vpath, e))?;
        if bytes.len() != row.dim * 8 {
            return Err(store_err(&vpath, format!("expected {} bytes, found {}", row.dim * 8, bytes.len())));
        }
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        let vector = EmbeddingVector {
            values,
            source_digest: row.key.text_digest,
            provider: row.key.provider.clone(),
            task_hint: row.key.task_hint,
        };
        out.push((row.key, vector));
    }
    Ok(out)
}
