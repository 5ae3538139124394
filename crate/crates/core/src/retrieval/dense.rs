use serde::{Deserialize, Serialize};

use super::{rank, Hit, RetrievalError};
use crate::providers::{embed, EmbeddingProvider};
use crate::scalar::Scalar;

/// Unit-norm document embeddings from one embedding model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseIndex<T> {
    model: String,
    dim: usize,
    vectors: Vec<Vec<T>>,
    doc_ids: Vec<String>,
}

impl<T: Scalar> DenseIndex<T> {
    pub fn build(provider: &dyn EmbeddingProvider, docs: &[(String, String)]) -> Result<Self, RetrievalError> {
        if docs.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        let texts: Vec<String> = docs.iter().map(|(_, t)| t.clone()).collect();
        let out = embed::<T>(provider, &texts)?;
        if !out.degenerate.is_empty() {
            log::warn!("{} document(s) embedded to the zero vector", out.degenerate.len());
        }
        Self::from_vectors(
            provider.model_name(),
            docs.iter().map(|(id, _)| id.clone()).collect(),
            out.vectors,
        )
    }

    /// Assemble an index from precomputed vectors, normalizing each row.
    pub fn from_vectors(model: &str, doc_ids: Vec<String>, mut vectors: Vec<Vec<T>>) -> Result<Self, RetrievalError> {
        if vectors.is_empty() {
            return Err(RetrievalError::EmptyCorpus);
        }
        if vectors.len() != doc_ids.len() {
            return Err(RetrievalError::Format(format!(
                "{} vectors for {} documents",
                vectors.len(),
                doc_ids.len()
            )));
        }
        let dim = vectors[0].len();
        for v in vectors.iter_mut() {
            if v.len() != dim {
                return Err(RetrievalError::DimensionMismatch {
                    left: dim,
                    right: v.len(),
                });
            }
            super::vector::normalize(v);
        }
        Ok(Self {
            model: model.to_string(),
            dim,
            vectors,
            doc_ids,
        })
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec<T>] {
        &self.vectors
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

    /// Rank documents against an already-embedded query.
    pub fn top_k_vector(&self, query: &[T], k: usize, exclude: Option<&str>) -> Result<Vec<Hit<T>>, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::InvalidK);
        }
        if self.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        let scores = self
            .vectors
            .iter()
            .map(|v| super::vector::cosine(query, v).map(|c| c.value))
            .collect::<Result<Vec<T>, _>>()?;
        Ok(rank(&self.doc_ids, scores, k, exclude))
    }

    /// Embed `query` with `provider` (which must be the model the index was
    /// built with) and rank documents.
    pub fn top_k(
        &self,
        provider: &dyn EmbeddingProvider,
        query: &str,
        k: usize,
        exclude: Option<&str>,
    ) -> Result<Vec<Hit<T>>, RetrievalError> {
        super::check_query(query, k)?;
        if provider.model_name() != self.model {
            return Err(RetrievalError::ModelMismatch {
                index: self.model.clone(),
                provider: provider.model_name().to_string(),
            });
        }
        let q = embed::<T>(provider, &[query.to_string()])?;
        self.top_k_vector(&q.vectors[0], k, exclude)
    }
}
