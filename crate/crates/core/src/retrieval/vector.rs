use crate::scalar::Scalar;

use super::RetrievalError;

/// A cosine score; `degenerate` is set when either input was the zero
/// vector (the score is then 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine<T> {
    pub value: T,
    pub degenerate: bool,
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Scale `v` to unit length in place; returns false (leaving `v` untouched)
/// for the zero vector.
pub fn normalize<T: Scalar>(v: &mut [T]) -> bool {
    let n = norm(v);
    if n == T::zero() {
        return false;
    }
    for x in v.iter_mut() {
        *x = *x / n;
    }
    true
}

/// `dot(a, b) / (|a| |b|)`, clamped to [-1, 1] against rounding.
pub fn cosine<T: Scalar>(a: &[T], b: &[T]) -> Result<Cosine<T>, RetrievalError> {
    if a.len() != b.len() {
        return Err(RetrievalError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == T::zero() || nb == T::zero() {
        return Ok(Cosine {
            value: T::zero(),
            degenerate: true,
        });
    }
    let value = (dot(a, b) / (na * nb)).max(-T::one()).min(T::one());
    Ok(Cosine {
        value,
        degenerate: false,
    })
}

/// Dot product of two sparse vectors given as index-sorted `(column, value)`
/// pairs.
pub fn sparse_dot<T: Scalar>(a: &[(usize, T)], b: &[(usize, T)]) -> T {
    let (mut i, mut j) = (0, 0);
    let mut acc = T::zero();
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc = acc + a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}
