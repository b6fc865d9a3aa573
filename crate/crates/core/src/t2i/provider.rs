use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CorpusLabel, Labeled, T2iError};
use crate::cache::ContentCache;
use crate::similarity::RetryPolicy;

pub const MT_ENDPOINT_VAR: &str = "SIMULCORPUS_MT_URL";
pub const MT_TOKEN_VAR: &str = "SIMULCORPUS_MT_TOKEN";

#[derive(Debug, Serialize, Deserialize)]
pub struct MtRequest {
    pub texts: Vec<String>,
    pub src_lang: String,
    pub tgt_lang: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MtResponse {
    pub texts: Vec<String>,
}

/// The wire side of a machine translation provider.
pub trait MtTransport: Send + Sync {
    fn translate(
        &self,
        texts: &[String],
        src_lang: &str,
        tgt_lang: &str,
    ) -> Result<Vec<String>, String>;
}

#[derive(Debug, Clone)]
pub struct HttpMtTransport {
    endpoint: String,
    token: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpMtTransport {
    pub fn new(endpoint: impl Into<String>, token: Option<String>, timeout: Duration) -> Self {
        HttpMtTransport {
            endpoint: endpoint.into(),
            token,
            client: reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .expect("http client builds"),
        }
    }

    pub fn from_env() -> Result<Self, T2iError> {
        let endpoint = std::env::var(MT_ENDPOINT_VAR)
            .map_err(|_| T2iError::Config(format!("{MT_ENDPOINT_VAR} is not set")))?;
        Ok(HttpMtTransport::new(
            endpoint,
            std::env::var(MT_TOKEN_VAR).ok(),
            Duration::from_secs(60),
        ))
    }
}

impl MtTransport for HttpMtTransport {
    fn translate(
        &self,
        texts: &[String],
        src_lang: &str,
        tgt_lang: &str,
    ) -> Result<Vec<String>, String> {
        let mut request = self.client.post(&self.endpoint).json(&MtRequest {
            texts: texts.to_vec(),
            src_lang: src_lang.into(),
            tgt_lang: tgt_lang.into(),
        });
        if let Some(token) = &self.token {
            request = request.bearer_auth(token);
        }
        let response = request
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| e.to_string())?;
        let body: MtResponse = response.json().map_err(|e| e.to_string())?;
        Ok(body.texts)
    }
}

/// Cached translation client. A failed batch falls back to one request per
/// text so a single bad input does not sink the rest.
pub struct MtClient {
    provider_id: String,
    transport: Box<dyn MtTransport>,
    cache: ContentCache<String>,
    retry: RetryPolicy,
    remote_calls: AtomicUsize,
}

impl MtClient {
    pub fn new(provider_id: impl Into<String>, transport: Box<dyn MtTransport>) -> Self {
        let provider_id = provider_id.into();
        MtClient {
            cache: ContentCache::in_memory(format!("mt:{provider_id}")),
            provider_id,
            transport,
            retry: RetryPolicy::default(),
            remote_calls: AtomicUsize::new(0),
        }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache = ContentCache::persistent(format!("mt:{}", self.provider_id), dir);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn remote_calls(&self) -> usize {
        self.remote_calls.load(Ordering::Relaxed)
    }

    fn call(&self, texts: &[String], src: &str, tgt: &str) -> Result<Vec<String>, (usize, String)> {
        self.retry.run(|| {
            self.remote_calls.fetch_add(1, Ordering::Relaxed);
            let out = self.transport.translate(texts, src, tgt)?;
            if out.len() != texts.len() {
                return Err(format!("{} outputs for {} inputs", out.len(), texts.len()));
            }
            Ok(out)
        })
    }

    /// Translates every text; failures are reported per text.
    pub fn translate(
        &self,
        texts: &[String],
        src_lang: &str,
        tgt_lang: &str,
    ) -> Result<Vec<Result<String, String>>, T2iError> {
        let keys: Vec<String> = texts
            .iter()
            .map(|t| self.cache.key(&[src_lang, tgt_lang, t]))
            .collect();
        let mut done: HashMap<&str, Result<String, String>> = HashMap::new();
        let mut missing: Vec<String> = Vec::new();
        let mut missing_keys: Vec<&str> = Vec::new();
        for (text, key) in texts.iter().zip(&keys) {
            if done.contains_key(key.as_str()) || missing_keys.contains(&key.as_str()) {
                continue;
            }
            match self.cache.get(key)? {
                Some(v) => {
                    done.insert(key, Ok(v));
                }
                None => {
                    missing.push(text.clone());
                    missing_keys.push(key);
                }
            }
        }
        if !missing.is_empty() {
            match self.call(&missing, src_lang, tgt_lang) {
                Ok(outputs) => {
                    for (key, out) in missing_keys.iter().zip(outputs) {
                        self.cache.insert(key, &out)?;
                        done.insert(key, Ok(out));
                    }
                }
                Err(_) if missing.len() > 1 => {
                    for (key, text) in missing_keys.iter().zip(&missing) {
                        match self.call(std::slice::from_ref(text), src_lang, tgt_lang) {
                            Ok(mut out) => {
                                let out = out.remove(0);
                                self.cache.insert(key, &out)?;
                                done.insert(key, Ok(out));
                            }
                            Err((_, reason)) => {
                                done.insert(key, Err(reason));
                            }
                        }
                    }
                }
                Err((_, reason)) => {
                    done.insert(missing_keys[0], Err(reason));
                }
            }
        }
        Ok(keys.iter().map(|k| done[k.as_str()].clone()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrip {
    /// Round-tripped texts labelled `TranslationFB`; failed lines are `None`.
    pub texts: Labeled<Option<String>>,
    pub errors: Vec<(usize, String)>,
}

/// Translates `texts` into `pivot` and back into `lang`.
pub fn round_trip(
    texts: &[String],
    client: &MtClient,
    lang: &str,
    pivot: &str,
) -> Result<RoundTrip, T2iError> {
    let forward = client.translate(texts, lang, pivot)?;
    let ok: Vec<String> = forward
        .iter()
        .filter_map(|r| r.as_ref().ok().cloned())
        .collect();
    let mut backward = client.translate(&ok, pivot, lang)?.into_iter();
    let mut out = Vec::with_capacity(texts.len());
    let mut errors = Vec::new();
    for (i, f) in forward.into_iter().enumerate() {
        match f {
            Err(e) => {
                errors.push((i, e));
                out.push(None);
            }
            Ok(_) => match backward.next().expect("one result per forward success") {
                Ok(t) => out.push(Some(t)),
                Err(e) => {
                    errors.push((i, e));
                    out.push(None);
                }
            },
        }
    }
    Ok(RoundTrip {
        texts: Labeled::new(CorpusLabel::TranslationFB, out),
        errors,
    })
}
