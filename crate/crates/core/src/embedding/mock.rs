//! Deterministic hashing embedder for tests and offline runs.

use std::hash::Hasher;

use fnv::FnvHasher;

use super::{EmbeddingError, EmbeddingProvider, TaskHint};

/// Whitespace tokens with non-alphanumeric edges trimmed, lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

/// Index and sign a token contributes to in a `dim`-wide vector.
pub fn token_slot(token: &str, dim: usize) -> (usize, f64) {
    let mut h = FnvHasher::default();
    h.write(token.as_bytes());
    let h = h.finish();
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    ((h % dim as u64) as usize, sign)
}

#[derive(Clone, Debug)]
pub struct MockEmbedder {
    dim: usize,
    normalize: bool,
}

impl MockEmbedder {
    pub fn new(dim: usize, normalize: bool) -> Self {
        Self { dim, normalize }
    }

    /// Signed token counts before normalization.
    pub fn raw_counts(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for token in tokenize(text) {
            let (i, s) = token_slot(&token, self.dim);
            v[i] += s;
        }
        v
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn name(&self) -> String {
        format!("mock-hash-d{}{}", self.dim, if self.normalize { "-l2" } else { "" })
    }

    fn embed(&self, text: &str, _hint: TaskHint) -> Result<Vec<f64>, EmbeddingError> {
        let mut v = self.raw_counts(text);
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
    fn tokenizer_trims_and_lowercases() {
        assert_eq!(tokenize("  KRAS, (mutation) -- x."), vec!["kras", "mutation", "x"]);
    }

    #[test]
    fn normalized_output_has_unit_norm() {
        let m = MockEmbedder::new(64, true);
        let v = m.embed("Concurrent KRAS mutation and MDM2 amplification.", TaskHint::Classification).unwrap();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raw_counts_accumulate_repeats() {
        let m = MockEmbedder::new(32, false);
        let (i, s) = token_slot("albumin", 32);
        assert_eq!(m.raw_counts("albumin Albumin ALBUMIN!")[i], 3.0 * s);
    }
}
