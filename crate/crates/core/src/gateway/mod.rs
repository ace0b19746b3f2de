//! Chat-completion gateway.
//!
//! [`Gateway`] fronts a [`Backend`] (live HTTP, scripted playback, or a
//! closure) with an optional on-disk record/replay cache keyed per sample.

mod cache;
mod live;
mod scripted;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

pub use cache::{cache_key, CacheEntry, ReplayCache};
pub use live::LiveBackend;
pub use scripted::{Matcher, Script, ScriptEntry, ScriptedBackend};

use crate::error::{Error, Result};

pub const DEFAULT_TEMPERATURE: f64 = 0.7;
pub const DEFAULT_TOP_P: f64 = 0.9;
pub const DEFAULT_MAX_TOKENS: u32 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub top_p: f64,
    pub n_samples: usize,
    pub max_tokens: u32,
    /// Replay key component; also what tag matchers in scripts look at.
    pub seed_tag: String,
    /// Model override for this request (the UTGen strategy targets its own model).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl GenRequest {
    pub fn new(messages: Vec<ChatMessage>, n_samples: usize, seed_tag: impl Into<String>) -> Self {
        Self {
            messages,
            temperature: DEFAULT_TEMPERATURE,
            top_p: DEFAULT_TOP_P,
            n_samples,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed_tag: seed_tag.into(),
            model: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::Config("temperature must be non-negative".into()));
        }
        Ok(())
    }

    /// All message contents joined, as seen by substring matchers.
    pub fn prompt_text(&self) -> String {
        self.messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenResponse {
    pub completions: Vec<String>,
    pub backend_id: String,
    pub cached: bool,
}

/// A source of completions.
pub trait Backend: Send + Sync {
    fn id(&self) -> String;

    /// Returns exactly `req.n_samples` completions.
    fn complete(&self, req: &GenRequest) -> Result<Vec<String>>;
}

/// Backend driven by a closure; handy for randomized tests.
pub struct FnBackend<F> {
    id: String,
    f: F,
}

impl<F> FnBackend<F>
where
    F: Fn(&GenRequest) -> Result<Vec<String>> + Send + Sync,
{
    pub fn new(id: impl Into<String>, f: F) -> Self {
        Self { id: id.into(), f }
    }
}

impl<F> Backend for FnBackend<F>
where
    F: Fn(&GenRequest) -> Result<Vec<String>> + Send + Sync,
{
    fn id(&self) -> String {
        self.id.clone()
    }

    fn complete(&self, req: &GenRequest) -> Result<Vec<String>> {
        (self.f)(req)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheMode {
    /// Read hits, record misses.
    Record,
    /// Serve only from the cache; a miss is an error.
    ReplayOnly,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStats {
    pub requests: u64,
    pub cache_hits: u64,
}

impl GatewayStats {
    pub fn hit_ratio(&self) -> f64 {
        if self.requests == 0 {
            0.0
        } else {
            self.cache_hits as f64 / self.requests as f64
        }
    }
}

pub struct Gateway {
    backend: Option<Box<dyn Backend>>,
    cache: Option<(ReplayCache, CacheMode)>,
    requests: AtomicU64,
    hits: AtomicU64,
}

impl Gateway {
    pub fn new(backend: impl Backend + 'static) -> Self {
        Self {
            backend: Some(Box::new(backend)),
            cache: None,
            requests: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    pub fn from_boxed(backend: Box<dyn Backend>) -> Self {
        Self {
            backend: Some(backend),
            cache: None,
            requests: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    /// A gateway that can only answer from `cache`.
    pub fn replay(cache: ReplayCache) -> Self {
        Self {
            backend: None,
            cache: Some((cache, CacheMode::ReplayOnly)),
            requests: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    pub fn with_cache(mut self, cache: ReplayCache) -> Self {
        self.cache = Some((cache, CacheMode::Record));
        self
    }

    pub fn backend_id(&self) -> String {
        match &self.backend {
            Some(b) => b.id(),
            None => "replay".into(),
        }
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            requests: self.requests.load(Ordering::Relaxed),
            cache_hits: self.hits.load(Ordering::Relaxed),
        }
    }

    pub fn generate(&self, req: &GenRequest) -> Result<GenResponse> {
        req.validate()?;
        self.requests.fetch_add(1, Ordering::Relaxed);

        if let Some((cache, mode)) = &self.cache {
            let hits: Vec<Option<CacheEntry>> = (0..req.n_samples)
                .map(|i| cache.get(&cache_key(req, i)))
                .collect::<Result<_>>()?;
            if hits.iter().all(Option::is_some) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                let entries: Vec<CacheEntry> = hits.into_iter().flatten().collect();
                return Ok(GenResponse {
                    backend_id: entries[0].backend_id.clone(),
                    completions: entries.into_iter().map(|e| e.completion).collect(),
                    cached: true,
                });
            }
            if *mode == CacheMode::ReplayOnly {
                let missing = hits.iter().position(Option::is_none).unwrap_or(0);
                return Err(Error::CacheMiss(format!(
                    "{} (seed_tag {}, sample {missing})",
                    cache_key(req, missing),
                    req.seed_tag
                )));
            }
        }

        let backend = self
            .backend
            .as_ref()
            .ok_or_else(|| Error::Config("gateway has no backend".into()))?;
        let completions: Vec<String> = backend
            .complete(req)?
            .into_iter()
            .map(|c| c.trim_end().to_string())
            .collect();
        if completions.len() != req.n_samples {
            return Err(Error::Gateway(format!(
                "backend {} returned {} completions, expected {}",
                backend.id(),
                completions.len(),
                req.n_samples
            )));
        }
        let backend_id = backend.id();
        if let Some((cache, _)) = &self.cache {
            for (i, completion) in completions.iter().enumerate() {
                cache.put(&CacheEntry::new(req, i, &backend_id, completion))?;
            }
        }
        Ok(GenResponse {
            completions,
            backend_id,
            cached: false,
        })
    }
}
