//! Clients for embedding and chat-completion services.
//!
//! Remote providers speak the OpenAI-compatible JSON protocol; the offline
//! providers ([`HashEmbedder`], [`OfflineChat`]) are deterministic and need no
//! network, which is what the tests and the evaluation replay use.

mod config;
mod hash_embed;
mod http;
mod offline;
mod retry;
pub mod schema;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scalar::Scalar;

pub use config::{ProviderConfig, ProvidersFile};
pub use hash_embed::{hash_embed, hashed_features, HashEmbedding, MIN_HASH_DIM};
pub use http::{HttpChat, HttpEmbedder};
pub use offline::OfflineChat;
pub use retry::{with_retry, Attempt, Gate, Permit, RetryPolicy};
pub use schema::Task;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProviderError {
    #[error("provider unavailable after {attempts} attempt(s): {last_error}")]
    Unavailable { attempts: u32, last_error: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("{task}: reply violates schema after {attempts} attempt(s): {message}")]
    SchemaViolation { task: Task, attempts: u32, message: String },
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("empty request")]
    EmptyInput,
}

/// Raw embedding reply, before normalization.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResponse {
    pub vectors: Vec<Vec<f64>>,
    /// Indices of inputs truncated to the provider's input limit.
    pub truncated: Vec<usize>,
    pub prompt_tokens: Option<u64>,
}

pub trait EmbeddingProvider: Send + Sync {
    fn model_name(&self) -> &str;
    fn embed_raw(&self, texts: &[String]) -> Result<EmbeddingResponse, ProviderError>;
}

/// Unit-norm embeddings plus the warnings gathered while producing them.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings<T> {
    pub vectors: Vec<Vec<T>>,
    pub truncated: Vec<usize>,
    /// Inputs whose vector was zero and could not be normalized.
    pub degenerate: Vec<usize>,
}

/// Embed `texts` and L2-normalize every vector, whatever the provider
/// already did.
pub fn embed<T: Scalar>(provider: &dyn EmbeddingProvider, texts: &[String]) -> Result<Embeddings<T>, ProviderError> {
    if texts.is_empty() {
        return Err(ProviderError::EmptyInput);
    }
    let raw = provider.embed_raw(texts)?;
    if raw.vectors.len() != texts.len() {
        return Err(ProviderError::InvalidResponse(format!(
            "{} vectors for {} texts",
            raw.vectors.len(),
            texts.len()
        )));
    }
    let dim = raw.vectors[0].len();
    if dim == 0 {
        return Err(ProviderError::InvalidResponse("zero-dimensional vectors".into()));
    }
    let mut vectors = Vec::with_capacity(texts.len());
    let mut degenerate = Vec::new();
    for (i, v) in raw.vectors.into_iter().enumerate() {
        if v.len() != dim {
            return Err(ProviderError::InvalidResponse(format!(
                "vector {i} has dimension {} (expected {dim})",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(ProviderError::InvalidResponse(format!("vector {i} is not finite")));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            degenerate.push(i);
            vectors.push(vec![T::zero(); dim]);
        } else {
            vectors.push(v.iter().map(|x| T::of(x / norm)).collect());
        }
    }
    Ok(Embeddings {
        vectors,
        truncated: raw.truncated,
        degenerate,
    })
}

/// Offline embedding provider backed by [`hash_embed`].
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    name: String,
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= MIN_HASH_DIM, "hash dimension must be at least {MIN_HASH_DIM}");
        Self {
            dim,
            name: format!("hash-embed-{dim}"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn model_name(&self) -> &str {
        &self.name
    }

    fn embed_raw(&self, texts: &[String]) -> Result<EmbeddingResponse, ProviderError> {
        Ok(EmbeddingResponse {
            vectors: texts.iter().map(|t| hash_embed::<f64>(t, self.dim).vector).collect(),
            truncated: Vec::new(),
            prompt_tokens: None,
        })
    }
}

/// One structured-output request. `variables` carries the template inputs
/// the prompts were rendered from; the offline provider works from them
/// directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub task: Task,
    pub system: String,
    pub user: String,
    pub variables: BTreeMap<String, String>,
    pub temperature: f64,
    pub max_tokens: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub raw: String,
    pub parsed: Value,
    /// Number of repair re-asks that were needed.
    pub retry_count: u32,
}

pub trait ChatProvider: Send + Sync {
    fn model_name(&self) -> &str;
    /// Return the raw reply text for one request.
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

const REPAIR_INSTRUCTION: &str = "Your previous reply could not be accepted";

/// Ask for a structured reply, validating it against the task schema and the
/// caller's semantic `check`. Invalid replies are re-asked up to
/// `max_repairs` times with the validation error appended to the prompt.
pub fn chat_complete(
    provider: &dyn ChatProvider,
    request: &ChatRequest,
    max_repairs: u32,
    check: &dyn Fn(&Value) -> Result<(), String>,
) -> Result<ChatResponse, ProviderError> {
    if request.system.trim().is_empty() || request.user.trim().is_empty() {
        return Err(ProviderError::EmptyInput);
    }
    let mut current = request.clone();
    let mut last_error = String::new();
    for attempt in 0..=max_repairs {
        let raw = provider.complete(&current)?;
        let verdict = schema::parse_json_reply(&raw).and_then(|parsed| {
            schema::validate(request.task, &parsed)?;
            check(&parsed)?;
            Ok(parsed)
        });
        match verdict {
            Ok(parsed) => {
                return Ok(ChatResponse {
                    raw,
                    parsed,
                    retry_count: attempt,
                })
            }
            Err(e) => {
                log::warn!("{}: invalid reply (attempt {}): {e}", request.task, attempt + 1);
                current.user = format!(
                    "{}\n\n{REPAIR_INSTRUCTION} ({e}). Reply again with only a JSON object that satisfies the required schema.",
                    request.user
                );
                last_error = e;
            }
        }
    }
    Err(ProviderError::SchemaViolation {
        task: request.task,
        attempts: max_repairs + 1,
        message: last_error,
    })
}
