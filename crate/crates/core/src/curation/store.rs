//! Report cache directory: one `<cache key hex>.json` per entry holding the
//! prompt digest, the raw provider output, and the validated report.

use std::fs;
use std::path::Path;

use super::{CachedReport, CuratorError};

fn store_err(path: &Path, e: impl std::fmt::Display) -> CuratorError {
    CuratorError::Store(format!("{}: {e}", path.display()))
}

pub fn save_report_dir(dir: &Path, entries: &[CachedReport]) -> Result<(), CuratorError> {
    fs::create_dir_all(dir).map_err(|e| store_err(dir, e))?;
    for entry in entries {
        let path = dir.join(format!("{}.json", entry.key.to_hex()));
        let text = serde_json::to_string_pretty(entry).expect("report serializes");
        fs::write(&path, text + "\n").map_err(|e| store_err(&path, e))?;
    }
    Ok(())
}

/// Missing directories load as empty. Entries are returned in key order.
pub fn load_report_dir(dir: &Path) -> Result<Vec<CachedReport>, CuratorError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| store_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| store_err(&path, e))?;
        let entry: CachedReport = serde_json::from_str(&text).map_err(|e| store_err(&path, e))?;
        let expected = format!("{}.json", entry.key.to_hex());
        if path.file_name().and_then(|n| n.to_str()) != Some(expected.as_str()) {
            return Err(store_err(&path, "file name does not match cache key"));
        }
        out.push(entry);
    }
    Ok(out)
}
