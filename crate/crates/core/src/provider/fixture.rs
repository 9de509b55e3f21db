//! Offline provider answering from a fixture map; used for tests and dry runs.

use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::http::error_for_status;
use super::{CaptionError, CaptionProvider, CaptionRequest};

/// Captions looked up by content hash first, then by image id, then `default`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixtures {
    #[serde(default)]
    pub by_hash: HashMap<String, String>,
    #[serde(default)]
    pub by_image_id: HashMap<String, String>,
    #[serde(default)]
    pub default: Option<String>,
}

impl Fixtures {
    pub fn with_default(caption: &str) -> Self {
        Self {
            default: Some(caption.to_string()),
            ..Default::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, CaptionError> {
        let text = std::fs::read_to_string(path).map_err(|e| CaptionError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CaptionError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub struct CallRecord {
    pub image_id: String,
    pub started: Instant,
    pub finished: Instant,
}

#[derive(Debug)]
pub struct FixtureProvider {
    id: String,
    fixtures: Fixtures,
    latency: Duration,
    scripted: Mutex<VecDeque<u16>>,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    log: Mutex<Vec<CallRecord>>,
}

impl FixtureProvider {
    pub fn new(id: impl Into<String>, fixtures: Fixtures) -> Self {
        Self {
            id: id.into(),
            fixtures,
            latency: Duration::ZERO,
            scripted: Mutex::new(VecDeque::new()),
            calls: AtomicUsize::new(0),
            in_flight: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    /// Simulated per-call latency.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    /// Queues HTTP-style failure statuses returned by the next calls, in order.
    pub fn script_failures(&self, statuses: impl IntoIterator<Item = u16>) {
        self.scripted.lock().expect("script poisoned").extend(statuses);
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Highest number of simultaneous calls observed.
    pub fn max_concurrency(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    pub fn call_log(&self) -> Vec<CallRecord> {
        let mut log = self.log.lock().expect("log poisoned").clone();
        log.sort_by_key(|c| c.started);
        log
    }

    fn answer(&self, req: &CaptionRequest) -> Result<String, CaptionError> {
        if let Some(status) = self.scripted.lock().expect("script poisoned").pop_front() {
            return Err(error_for_status(status, "scripted failure".into()));
        }
        self.fixtures
            .by_hash
            .get(&req.content_hash())
            .or_else(|| self.fixtures.by_image_id.get(&req.image_id))
            .or(self.fixtures.default.as_ref())
            .cloned()
            .ok_or_else(|| CaptionError::ProviderError {
                status: 404,
                body: format!("no fixture caption for {}", req.image_id),
            })
    }
}

impl CaptionProvider for FixtureProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&self, req: &CaptionRequest) -> Result<String, CaptionError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        let started = Instant::now();
        if !self.latency.is_zero() {
            thread::sleep(self.latency);
        }
        let out = self.answer(req);
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        self.log.lock().expect("log poisoned").push(CallRecord {
            image_id: req.image_id.clone(),
            started,
            finished: Instant::now(),
        });
        out
    }
}
