use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Scorer, SimilarityError};
use crate::cache::ContentCache;

pub const ENDPOINT_VAR: &str = "SIMULCORPUS_EMBEDDING_URL";
pub const TOKEN_VAR: &str = "SIMULCORPUS_EMBEDDING_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SimilarityError> {
        if values.is_empty() {
            return Err(SimilarityError::InvalidVector("empty vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SimilarityError::InvalidVector(
                "non-finite component".into(),
            ));
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Cosine similarity, with negative values clamped to zero.
    pub fn cosine(&self, other: &EmbeddingVector) -> Result<f64, SimilarityError> {
        if self.dim() != other.dim() {
            return Err(SimilarityError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let dot: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        let na = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb = other.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            return Ok(0.0);
        }
        Ok((dot / (na * nb)).clamp(0.0, 1.0))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

/// The wire side of an embedding provider.
pub trait EmbeddingTransport: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, String>;
}

/// POSTs `{"texts": [...]}` and expects `{"vectors": [[...], ...]}`.
#[derive(Debug, Clone)]
pub struct HttpEmbeddingTransport {
    endpoint: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpEmbeddingTransport {
    pub fn new(endpoint: impl Into<String>, token: Option<String>, timeout: Duration) -> Self {
        HttpEmbeddingTransport {
            endpoint: endpoint.into(),
            token,
            client: reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .expect("http client builds"),
        }
    }

    /// Reads the endpoint and optional bearer token from the environment.
    pub fn from_env() -> Result<Self, SimilarityError> {
        let endpoint = std::env::var(ENDPOINT_VAR)
            .map_err(|_| SimilarityError::Config(format!("{ENDPOINT_VAR} is not set")))?;
        Ok(HttpEmbeddingTransport::new(
            endpoint,
            std::env::var(TOKEN_VAR).ok(),
            Duration::from_secs(30),
        ))
    }
}

impl EmbeddingTransport for HttpEmbeddingTransport {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, String> {
        let mut request = self.client.post(&self.endpoint).json(&EmbedRequest {
            texts: texts.to_vec(),
        });
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| e.to_string())?;
        let body: EmbedResponse = response.json().map_err(|e| e.to_string())?;
        Ok(body.vectors)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: usize,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_millis(200),
        }
    }
}

impl RetryPolicy {
    pub fn run<T>(
        &self,
        mut call: impl FnMut() -> Result<T, String>,
    ) -> Result<T, (usize, String)> {
        let mut last = String::new();
        for attempt in 0..self.attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(self.base_delay * (1 << (attempt - 1)));
            }
            match call() {
                Ok(value) => return Ok(value),
                Err(e) => {
                    log::warn!("provider attempt {} failed: {e}", attempt + 1);
                    last = e;
                }
            }
        }
        Err((self.attempts.max(1), last))
    }
}

/// Batched, cached embedding client.
pub struct EmbeddingClient {
    provider_id: String,
    transport: Box<dyn EmbeddingTransport>,
    cache: ContentCache<Vec<f64>>,
    retry: RetryPolicy,
    remote_calls: AtomicUsize,
}

impl EmbeddingClient {
    pub fn new(provider_id: impl Into<String>, transport: Box<dyn EmbeddingTransport>) -> Self {
        let provider_id = provider_id.into();
        EmbeddingClient {
            cache: ContentCache::in_memory(format!("embedding:{provider_id}")),
            provider_id,
            transport,
            retry: RetryPolicy::default(),
            remote_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache = ContentCache::persistent(format!("embedding:{}", self.provider_id), dir);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    /// Number of transport requests issued so far.
    pub fn remote_calls(&self) -> usize {
        self.remote_calls.load(Ordering::Relaxed)
    }

    pub fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        let keys: Vec<String> = texts.iter().map(|t| self.cache.key(&[t])).collect();
        let mut found: HashMap<&str, Vec<f64>> = HashMap::new();
        let mut missing: Vec<String> = Vec::new();
        let mut missing_keys: Vec<&str> = Vec::new();
        for (text, key) in texts.iter().zip(&keys) {
            if found.contains_key(key.as_str()) || missing_keys.contains(&key.as_str()) {
                continue;
            }
            match self.cache.get(key)? {
                Some(v) => {
                    found.insert(key, v);
                }
                None => {
                    missing.push(text.clone());
                    missing_keys.push(key);
                }
            }
        }

        if !missing.is_empty() {
            let vectors = self
                .retry
                .run(|| {
                    self.remote_calls.fetch_add(1, Ordering::Relaxed);
                    self.transport.embed(&missing)
                })
                .map_err(|(attempts, reason)| SimilarityError::ProviderUnavailable {
                    attempts,
                    reason,
                })?;
            if vectors.len() != missing.len() {
                return Err(SimilarityError::CountMismatch {
                    expected: missing.len(),
                    found: vectors.len(),
                });
            }
            for (key, vector) in missing_keys.iter().zip(vectors) {
                EmbeddingVector::new(vector.clone())?;
                self.cache.insert(key, &vector)?;
                found.insert(key, vector);
            }
        }

        let out: Vec<EmbeddingVector> = keys
            .iter()
            .map(|k| EmbeddingVector {
                values: found[k.as_str()].clone(),
            })
            .collect();
        if let Some(first) = out.first() {
            if let Some(bad) = out.iter().find(|v| v.dim() != first.dim()) {
                return Err(SimilarityError::DimensionMismatch {
                    expected: first.dim(),
                    found: bad.dim(),
                });
            }
        }
        Ok(out)
    }
}

/// Cosine similarity in the provider's embedding space.
pub struct EmbeddingScorer<'a> {
    client: &'a EmbeddingClient,
}

impl<'a> EmbeddingScorer<'a> {
    pub fn new(client: &'a EmbeddingClient) -> Self {
        EmbeddingScorer { client }
    }
}

impl Scorer for EmbeddingScorer<'_> {
    fn score(&self, a: &str, b: &str) -> Result<f64, SimilarityError> {
        let vectors = self.client.embed_batch(&[a.to_string(), b.to_string()])?;
        vectors[0].cosine(&vectors[1])
    }

    fn prepare(&self, texts: &[String]) -> Result<(), SimilarityError> {
        self.client.embed_batch(texts).map(|_| ())
    }
}
