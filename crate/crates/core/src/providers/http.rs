//! OpenAI-compatible HTTP clients (`/chat/completions`, `/embeddings`).

use rayon::prelude::*;
use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::retry::{with_retry, Attempt, Gate};
use super::{ChatProvider, ChatRequest, EmbeddingProvider, EmbeddingResponse, ProviderConfig, ProviderError};
use crate::text::truncate_chars;

struct Endpoint {
    config: ProviderConfig,
    client: Client,
    gate: Gate,
    api_key: Option<String>,
}

impl Endpoint {
    fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let api_key = config.api_key()?;
        let client = Client::builder()
            .timeout(config.timeout())
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self {
            gate: Gate::new(config.parallelism),
            config,
            client,
            api_key,
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{path}", self.config.url.trim_end_matches('/'))
    }

    /// POST `body` with retries; transient failures (transport errors, 429,
    /// 5xx) are retried with backoff, authentication failures are not.
    fn post(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let url = self.url(path);
        with_retry(self.config.retry_policy(), std::thread::sleep, |_| {
            let _permit = self.gate.acquire();
            let mut req = self.client.post(&url).json(body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let resp = match req.send() {
                Ok(r) => r,
                Err(e) => return Attempt::Retry(e.to_string()),
            };
            let status = resp.status();
            let text = resp.text().unwrap_or_default();
            if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
                return Attempt::Fail(ProviderError::Auth(format!("{status}: {text}")));
            }
            if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
                return Attempt::Retry(format!("{status}: {text}"));
            }
            if !status.is_success() {
                return Attempt::Fail(ProviderError::InvalidResponse(format!("{status}: {text}")));
            }
            match serde_json::from_str(&text) {
                Ok(v) => Attempt::Done(v),
                Err(e) => Attempt::Retry(format!("unparseable response body: {e}")),
            }
        })
    }
}

/// Chat-completions client.
pub struct HttpChat {
    endpoint: Endpoint,
}

impl HttpChat {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            endpoint: Endpoint::new(config)?,
        })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.endpoint.config
    }
}

impl ChatProvider for HttpChat {
    fn model_name(&self) -> &str {
        &self.endpoint.config.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.endpoint.config.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "response_format": {"type": "json_object"},
        });
        let reply = self.endpoint.post("chat/completions", &body)?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::InvalidResponse("missing choices[0].message.content".into()))
    }
}

/// Embeddings client; inputs are batched and truncated to the configured
/// character limit.
pub struct HttpEmbedder {
    endpoint: Endpoint,
}

impl HttpEmbedder {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            endpoint: Endpoint::new(config)?,
        })
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<(Vec<Vec<f64>>, Option<u64>), ProviderError> {
        let body = json!({"model": self.endpoint.config.model, "input": texts});
        let reply = self.endpoint.post("embeddings", &body)?;
        let data = reply["data"]
            .as_array()
            .ok_or_else(|| ProviderError::InvalidResponse("missing `data` array".into()))?;
        let mut rows: Vec<(u64, Vec<f64>)> = Vec::with_capacity(data.len());
        for (pos, item) in data.iter().enumerate() {
            let index = item["index"].as_u64().unwrap_or(pos as u64);
            let vector = item["embedding"]
                .as_array()
                .ok_or_else(|| ProviderError::InvalidResponse(format!("data[{pos}] has no embedding")))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| ProviderError::InvalidResponse("non-numeric component".into()))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push((index, vector));
        }
        rows.sort_by_key(|(i, _)| *i);
        let tokens = reply["usage"]["prompt_tokens"].as_u64();
        Ok((rows.into_iter().map(|(_, v)| v).collect(), tokens))
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn model_name(&self) -> &str {
        &self.endpoint.config.model
    }

    fn embed_raw(&self, texts: &[String]) -> Result<EmbeddingResponse, ProviderError> {
        let limit = self.endpoint.config.max_input_chars;
        let mut truncated = Vec::new();
        let inputs: Vec<&str> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let cut = truncate_chars(t, limit);
                if cut.len() < t.len() {
                    truncated.push(i);
                }
                cut
            })
            .collect();
        if !truncated.is_empty() {
            log::warn!("{} embedding input(s) truncated to {limit} chars", truncated.len());
        }
        let batches: Vec<(Vec<Vec<f64>>, Option<u64>)> = inputs
            .par_chunks(self.endpoint.config.batch_size)
            .map(|chunk| self.embed_batch(chunk))
            .collect::<Result<_, _>>()?;
        let mut vectors = Vec::with_capacity(texts.len());
        let mut tokens: Option<u64> = None;
        for (vs, t) in batches {
            vectors.extend(vs);
            if let Some(t) = t {
                tokens = Some(tokens.unwrap_or(0) + t);
            }
        }
        Ok(EmbeddingResponse {
            vectors,
            truncated,
            prompt_tokens: tokens,
        })
    }
}
