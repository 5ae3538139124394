//! Deterministic offline embeddings: word 1–2 grams hashed into a fixed
//! number of signed buckets.

use sha2::{Digest, Sha256};

use crate::scalar::Scalar;
use crate::text::{tokenize, unigrams_and_bigrams};

/// Smallest supported dimension.
pub const MIN_HASH_DIM: usize = 8;

/// Bucket and sign for one n-gram. SHA-256 keeps the mapping identical on
/// every platform and toolchain.
fn bucket(gram: &str, dim: usize) -> (usize, bool) {
    let digest = Sha256::digest(gram.as_bytes());
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    let slot = (u64::from_le_bytes(word) % dim as u64) as usize;
    (slot, digest[8] & 1 == 1)
}

/// Signed bucket counts for the text's 1–2 grams, sorted by bucket, zero
/// buckets omitted. Values are small integers, so dot products over them are
/// exact in floating point.
pub fn hashed_features(text: &str, dim: usize) -> Vec<(usize, f64)> {
    assert!(dim >= MIN_HASH_DIM, "hash dimension must be at least {MIN_HASH_DIM}");
    let grams = unigrams_and_bigrams(&tokenize(text));
    let mut counts: Vec<(usize, f64)> = grams
        .iter()
        .map(|g| {
            let (slot, negative) = bucket(g, dim);
            (slot, if negative { -1.0 } else { 1.0 })
        })
        .collect();
    counts.sort_by_key(|&(slot, _)| slot);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(counts.len());
    for (slot, v) in counts {
        match merged.last_mut() {
            Some(last) if last.0 == slot => last.1 += v,
            _ => merged.push((slot, v)),
        }
    }
    merged.retain(|&(_, v)| v != 0.0);
    merged
}

/// A hashed embedding; `degenerate` marks the zero vector produced by text
/// without tokens (or whose grams cancel out).
#[derive(Debug, Clone, PartialEq)]
pub struct HashEmbedding<T> {
    pub vector: Vec<T>,
    pub degenerate: bool,
}

/// Dense, L2-normalized hashed embedding of `text` in `dim` dimensions.
pub fn hash_embed<T: Scalar>(text: &str, dim: usize) -> HashEmbedding<T> {
    let features = hashed_features(text, dim);
    let mut vector = vec![T::zero(); dim];
    let norm = features.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return HashEmbedding {
            vector,
            degenerate: true,
        };
    }
    for (slot, v) in features {
        vector[slot] = T::of(v / norm);
    }
    HashEmbedding {
        vector,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn unit_norm_and_deterministic() {
        let a = hash_embed::<f64>("a", 64);
        let b = hash_embed::<f64>("a", 64);
        assert_eq!(a, b);
        let norm: f64 = a.vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert!(!a.degenerate);
    }

    #[test]
    fn identical_texts_have_cosine_one() {
        let a = hash_embed::<f64>("alpha beta", 64);
        let b = hash_embed::<f64>("alpha beta", 64);
        assert!((cos(&a.vector, &b.vector) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_text_is_degenerate_zero_vector() {
        let e = hash_embed::<f32>("  ", 16);
        assert!(e.degenerate);
        assert!(e.vector.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn features_are_sorted_and_merged() {
        let f = hashed_features("x x x y", 8);
        assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
        let mass: f64 = f.iter().map(|(_, v)| v.abs()).sum();
        // 4 unigrams + 3 bigrams; collisions can only cancel mass.
        assert!(mass <= 7.0);
    }

    /// Pinned bucket assignments: changing the hashing scheme changes every
    /// persisted dense index and golden file.
    #[test]
    fn bucket_assignment_is_stable() {
        let f = hashed_features("risk", 4096);
        assert_eq!(f.len(), 1);
        let (slot, negative) = bucket("risk", 4096);
        assert_eq!(f[0], (slot, if negative { -1.0 } else { 1.0 }));
        let digest = Sha256::digest(b"risk");
        let expected = u64::from_le_bytes(digest[..8].try_into().unwrap()) % 4096;
        assert_eq!(slot as u64, expected);
    }

    #[test]
    fn disjoint_vocabularies_are_nearly_orthogonal() {
        let a = hash_embed::<f64>("aaa bbb", 4096);
        let b = hash_embed::<f64>("ccc ddd", 4096);
        assert!(cos(&a.vector, &b.vector).abs() < 0.05);
    }
}
