use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{rank, Hit, RetrievalError};
use crate::scalar::Scalar;
use crate::text::{tokenize, unigrams_and_bigrams};

/// TF-IDF index over word 1–2 grams.
///
/// Term frequency is the raw count, IDF is smoothed
/// (`ln((1 + N) / (1 + df)) + 1`), and every row is L2-normalized, so a
/// query's cosine with a document is a sparse dot product. Query terms
/// outside the vocabulary are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseIndex<T> {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<T>,
    rows: Vec<Vec<(usize, T)>>,
    doc_ids: Vec<String>,
}

fn term_counts(text: &str) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for gram in unigrams_and_bigrams(&tokenize(text)) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

impl<T: Scalar> SparseIndex<T> {
    pub fn build(docs: &[(String, String)]) -> Result<Self, RetrievalError> {
        if docs.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let counts: Vec<BTreeMap<String, usize>> = docs.iter().map(|(_, t)| term_counts(t)).collect();
        let terms: BTreeSet<&String> = counts.iter().flat_map(|c| c.keys()).collect();
        let vocabulary: BTreeMap<String, usize> =
            terms.into_iter().enumerate().map(|(col, t)| (t.clone(), col)).collect();

        let mut df = vec![0usize; vocabulary.len()];
        for c in &counts {
            for term in c.keys() {
                df[vocabulary[term]] += 1;
            }
        }
        let n = docs.len() as f64;
        let idf: Vec<T> = df
            .iter()
            .map(|&d| T::of(((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .collect();

        let mut index = Self {
            vocabulary,
            idf,
            rows: Vec::with_capacity(docs.len()),
            doc_ids: docs.iter().map(|(id, _)| id.clone()).collect(),
        };
        index.rows = counts.iter().map(|c| index.weigh(c)).collect();
        Ok(index)
    }

    fn weigh(&self, counts: &BTreeMap<String, usize>) -> Vec<(usize, T)> {
        let mut row: Vec<(usize, T)> = counts
            .iter()
            .filter_map(|(term, &tf)| {
                self.vocabulary
                    .get(term)
                    .map(|&col| (col, T::of_usize(tf) * self.idf[col]))
            })
            .collect();
        row.sort_by_key(|&(col, _)| col);
        let norm = row.iter().map(|&(_, v)| v * v).sum::<T>().sqrt();
        if norm > T::zero() {
            for (_, v) in row.iter_mut() {
                *v = *v / norm;
            }
        }
        row
    }

    /// L2-normalized TF-IDF vector of `text` in this index's space.
    pub fn vectorize(&self, text: &str) -> Vec<(usize, T)> {
        self.weigh(&term_counts(text))
    }

    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[T] {
        &self.idf
    }

    pub fn rows(&self) -> &[Vec<(usize, T)>] {
        &self.rows
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    /// Cosine of the query against every document, in index order.
    pub fn scores(&self, query: &str) -> Vec<T> {
        let q = self.vectorize(query);
        self.rows.iter().map(|row| super::vector::sparse_dot(&q, row)).collect()
    }

    pub fn top_k(&self, query: &str, k: usize, exclude: Option<&str>) -> Result<Vec<Hit<T>>, RetrievalError> {
        super::check_query(query, k)?;
        if self.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        Ok(rank(&self.doc_ids, self.scores(query), k, exclude))
    }
}
