//! Caption collection from pluggable captioning services.
//!
//! A [`CaptionService`] wraps a [`CaptionProvider`] with the content-hash
//! cache and the retry policy. Providers only perform the raw call.

mod cache;
mod config;
mod fixture;
mod http;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use log::debug;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{cache_file_name, CacheEntry, CaptionCache};
pub use config::{load_provider_config, ProviderConfig, ProviderKind, RequestFormat};
pub use fixture::{CallRecord, FixtureProvider, Fixtures};
pub use http::HttpProvider;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CaptionError {
    #[error("authentication failed: {0}")]
    AuthError(String),

    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },

    #[error("provider returned status {status}: {body}")]
    ProviderError { status: u16, body: String },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("unusable provider response: {0}")]
    BadResponse(String),

    #[error("invalid caption request: {0}")]
    InvalidRequest(String),

    #[error("caption cache: {0}")]
    Cache(String),

    #[error("provider configuration: {0}")]
    Config(String),
}

impl CaptionError {
    /// Worth another attempt: throttling, server-side failures, dropped connections.
    pub fn is_transient(&self) -> bool {
        match self {
            CaptionError::RateLimited { .. } | CaptionError::Transport(_) => true,
            CaptionError::ProviderError { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

#[derive(Debug, Clone)]
pub struct CaptionRequest {
    pub image_id: String,
    pub bytes: Arc<Vec<u8>>,
}

impl CaptionRequest {
    pub fn new(image_id: impl Into<String>, bytes: Vec<u8>) -> Result<Self, CaptionError> {
        let image_id = image_id.into();
        if bytes.is_empty() {
            return Err(CaptionError::InvalidRequest(format!("{image_id}: empty image")));
        }
        if !bytes.starts_with(&PNG_SIGNATURE) {
            return Err(CaptionError::InvalidRequest(format!("{image_id}: not a PNG")));
        }
        Ok(Self {
            image_id,
            bytes: Arc::new(bytes),
        })
    }

    pub fn content_hash(&self) -> String {
        content_hash(&self.bytes)
    }
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionResult {
    pub image_id: String,
    pub provider_id: String,
    pub caption: String,
    pub latency_ms: u64,
    /// Unix milliseconds.
    pub retrieved_at: u64,
    pub from_cache: bool,
}

/// Raw access to a captioning system.
pub trait CaptionProvider: Send + Sync {
    fn id(&self) -> &str;
    fn fetch(&self, req: &CaptionRequest) -> Result<String, CaptionError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(250),
            factor: 2.0,
            max_delay: Duration::from_secs(4),
        }
    }
}

impl RetryPolicy {
    pub fn immediate(attempts: u32) -> Self {
        Self {
            attempts,
            base_delay: Duration::ZERO,
            factor: 1.0,
            max_delay: Duration::ZERO,
        }
    }

    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let secs = self.base_delay.as_secs_f64() * self.factor.powi(retry as i32);
        Duration::from_secs_f64(secs.min(self.max_delay.as_secs_f64()))
    }
}

/// Lowercase, trim and collapse internal whitespace.
pub fn normalize_caption(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub struct CaptionService {
    provider: Arc<dyn CaptionProvider>,
    cache: Option<CaptionCache>,
    retry: RetryPolicy,
}

impl CaptionService {
    pub fn new(provider: Arc<dyn CaptionProvider>, cache: Option<CaptionCache>, retry: RetryPolicy) -> Self {
        Self { provider, cache, retry }
    }

    pub fn provider_id(&self) -> &str {
        self.provider.id()
    }

    pub fn cache(&self) -> Option<&CaptionCache> {
        self.cache.as_ref()
    }

    /// Cached lookup, falling back to the provider with retries on transient
    /// failures. Successful captions are normalized and cached.
    pub fn caption(&self, req: &CaptionRequest) -> Result<CaptionResult, CaptionError> {
        let hash = req.content_hash();
        let provider_id = self.provider.id().to_string();
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&hash)) {
            return Ok(CaptionResult {
                image_id: req.image_id.clone(),
                provider_id,
                caption: hit.caption,
                latency_ms: hit.latency_ms,
                retrieved_at: hit.ts,
                from_cache: true,
            });
        }

        let attempts = self.retry.attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                let wait = self.retry.delay(attempt - 1);
                debug!("retrying {} in {:?}", req.image_id, wait);
                thread::sleep(wait);
            }
            let started = Instant::now();
            match self.provider.fetch(req) {
                Ok(raw) => {
                    let caption = normalize_caption(&raw);
                    if caption.is_empty() {
                        return Err(CaptionError::BadResponse(format!("{}: empty caption", req.image_id)));
                    }
                    let entry = CacheEntry {
                        hash,
                        image_id: req.image_id.clone(),
                        caption,
                        ts: unix_millis(),
                        latency_ms: started.elapsed().as_millis() as u64,
                    };
                    let stored = match &self.cache {
                        Some(c) => c.put(entry)?,
                        None => entry,
                    };
                    return Ok(CaptionResult {
                        image_id: req.image_id.clone(),
                        provider_id,
                        caption: stored.caption,
                        latency_ms: stored.latency_ms,
                        retrieved_at: stored.ts,
                        from_cache: false,
                    });
                }
                Err(e) if e.is_transient() => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(match last {
            Some(CaptionError::RateLimited { .. }) => CaptionError::RateLimited { attempts },
            Some(e) => e,
            None => CaptionError::Transport("no attempt made".into()),
        })
    }
}

/// Captions every request with at most `max_in_flight` concurrent calls.
/// Results keep request order; failures are reported per item.
pub fn caption_batch(
    service: &CaptionService,
    reqs: &[CaptionRequest],
    max_in_flight: usize,
) -> Result<Vec<Result<CaptionResult, CaptionError>>, CaptionError> {
    if max_in_flight == 0 {
        return Err(CaptionError::InvalidRequest("max_in_flight must be >= 1".into()));
    }
    let slots: Vec<Mutex<Option<Result<CaptionResult, CaptionError>>>> = reqs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = max_in_flight.min(reqs.len());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= reqs.len() {
                    break;
                }
                let r = service.caption(&reqs[i]);
                *slots[i].lock().expect("result slot poisoned") = Some(r);
            });
        }
    });
    Ok(slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot poisoned").expect("every request is processed"))
        .collect())
}

pub(crate) fn unix_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}
