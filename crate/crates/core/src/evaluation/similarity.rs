//! BERTScore-style similarity between two short texts.
//!
//! Each token is represented by a vector of its ±1-token window; precision
//! is the mean, over tokens of `a`, of the best cosine against any token of
//! `b` (recall symmetrically), and the score is their F1.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::EvalError;
use crate::providers::{embed, hashed_features, EmbeddingProvider};
use crate::text::tokenize;

/// Hash dimension of the offline scorer.
pub const DEFAULT_SCORER_DIM: usize = 4096;

enum TokenVectors {
    /// Integer-valued hashed features with their squared norms.
    Sparse(Vec<(Vec<(usize, f64)>, f64)>),
    /// Unit-norm dense token vectors.
    Dense(Vec<Vec<f64>>),
}

impl TokenVectors {
    fn len(&self) -> usize {
        match self {
            TokenVectors::Sparse(v) => v.len(),
            TokenVectors::Dense(v) => v.len(),
        }
    }
}

enum Backend {
    Offline { dim: usize },
    Remote(Arc<dyn EmbeddingProvider>),
}

/// Pair-similarity scorer with a per-text cache of token vectors. Cheap to
/// share across threads.
pub struct PairScorer {
    backend: Backend,
    cache: Mutex<HashMap<String, Arc<TokenVectors>>>,
}

impl std::fmt::Debug for PairScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PairScorer").field("name", &self.name()).finish()
    }
}

/// ±1-token context windows, one per token.
pub fn token_windows(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    (0..tokens.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(tokens.len());
            tokens[lo..hi].join(" ")
        })
        .collect()
}

fn sparse_cos(a: &(Vec<(usize, f64)>, f64), b: &(Vec<(usize, f64)>, f64)) -> f64 {
    if a.1 == 0.0 || b.1 == 0.0 {
        return 0.0;
    }
    let dot = crate::retrieval::vector::sparse_dot(&a.0, &b.0);
    (dot / (a.1 * b.1).sqrt()).clamp(0.0, 1.0)
}

fn dense_cos(a: &[f64], b: &[f64]) -> f64 {
    crate::retrieval::vector::dot(a, b).clamp(0.0, 1.0)
}

impl PairScorer {
    pub fn offline(dim: usize) -> Self {
        Self {
            backend: Backend::Offline { dim },
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Token vectors come from a remote embedding endpoint, one input per
    /// token window.
    pub fn remote(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Self {
            backend: Backend::Remote(provider),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn name(&self) -> String {
        match &self.backend {
            Backend::Offline { dim } => format!("offline-window-hash-{dim}"),
            Backend::Remote(p) => format!("remote-window-{}", p.model_name()),
        }
    }

    fn prepare(&self, text: &str) -> Result<Arc<TokenVectors>, EvalError> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(text) {
            return Ok(Arc::clone(hit));
        }
        let windows = token_windows(text);
        if windows.is_empty() {
            return Err(EvalError::DegenerateText(text.to_string()));
        }
        let vectors = match &self.backend {
            Backend::Offline { dim } => TokenVectors::Sparse(
                windows
                    .iter()
                    .map(|w| {
                        let f = hashed_features(w, *dim);
                        let sq = f.iter().map(|(_, v)| v * v).sum();
                        (f, sq)
                    })
                    .collect(),
            ),
            Backend::Remote(p) => TokenVectors::Dense(embed::<f64>(p.as_ref(), &windows)?.vectors),
        };
        let vectors = Arc::new(vectors);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(text.to_string(), Arc::clone(&vectors));
        Ok(vectors)
    }

    /// Similarity F1 in [0, 1]. Identical texts score exactly 1.
    pub fn score(&self, a: &str, b: &str) -> Result<f64, EvalError> {
        let va = self.prepare(a)?;
        let vb = self.prepare(b)?;
        let (n, m) = (va.len(), vb.len());
        let mut best_a = vec![0.0f64; n];
        let mut best_b = vec![0.0f64; m];
        for i in 0..n {
            for j in 0..m {
                let c = match (&*va, &*vb) {
                    (TokenVectors::Sparse(x), TokenVectors::Sparse(y)) => sparse_cos(&x[i], &y[j]),
                    (TokenVectors::Dense(x), TokenVectors::Dense(y)) => dense_cos(&x[i], &y[j]),
                    _ => unreachable!("one scorer produces one representation"),
                };
                best_a[i] = best_a[i].max(c);
                best_b[j] = best_b[j].max(c);
            }
        }
        let p = best_a.iter().sum::<f64>() / n as f64;
        let r = best_b.iter().sum::<f64>() / m as f64;
        if p + r == 0.0 {
            return Ok(0.0);
        }
        Ok((2.0 * p * r / (p + r)).clamp(0.0, 1.0))
    }

    /// `|R| × |G|` score matrix.
    pub fn matrix(&self, r: &[String], g: &[String]) -> Result<Vec<Vec<f64>>, EvalError> {
        r.iter().map(|a| g.iter().map(|b| self.score(a, b)).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_score_exactly_one() {
        let s = PairScorer::offline(DEFAULT_SCORER_DIM);
        for t in ["reflects gender stereotypes", "x", "fails fails fails on long inputs"] {
            assert_eq!(s.score(t, t).unwrap(), 1.0);
        }
    }

    #[test]
    fn symmetric() {
        let s = PairScorer::offline(DEFAULT_SCORER_DIM);
        let a = "perpetuates gender stereotypes in job ads";
        let b = "reinforces stereotypes about gender";
        assert!((s.score(a, b).unwrap() - s.score(b, a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn disjoint_texts_score_low_and_paraphrases_higher() {
        let s = PairScorer::offline(DEFAULT_SCORER_DIM);
        let low = s.score("aaa bbb ccc", "ddd eee fff").unwrap();
        assert!(low < 0.1, "{low}");
        let para = s
            .score(
                "reflects gender stereotypes from the training data",
                "reflects gender stereotypes in the training data",
            )
            .unwrap();
        assert!(para > 0.6, "{para}");
    }

    #[test]
    fn empty_text_is_degenerate() {
        let s = PairScorer::offline(64);
        assert!(matches!(s.score("...", "x"), Err(EvalError::DegenerateText(_))));
    }

    #[test]
    fn windows() {
        assert_eq!(token_windows("a b c"), ["a b", "a b c", "b c"]);
    }
}
