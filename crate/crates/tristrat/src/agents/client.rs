//! Completion client: content-addressed response cache, retry with
//! exponential backoff, token-bucket rate limiting, and an in-flight cap.
//!
//! Safe for concurrent use; per-stock agent calls fan out against one shared
//! client.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::provider::{ChatRequest, ChatResponse, Provider};
use super::AgentError;

/// SHA-256 of (model, rendered prompt); the cache file name for a request.
pub fn cache_key(request: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(request.model.as_bytes());
    hasher.update([0u8]);
    hasher.update(request.rendered_prompt().as_bytes());
    hex::encode(hasher.finalize())
}

/// Directory of raw response bodies named by request hash.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, AgentError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn get(&self, key: &str) -> Option<String> {
        std::fs::read_to_string(self.dir.join(key)).ok()
    }

    pub fn put(&self, key: &str, body: &str) -> Result<(), AgentError> {
        let tmp = self.dir.join(format!("{key}.tmp"));
        std::fs::write(&tmp, body)?;
        std::fs::rename(&tmp, self.dir.join(key))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total transport attempts, including the first.
    pub attempts: u32,
    /// Backoff before attempt n+1 is `base * 2^(n-1)`.
    #[serde(with = "duration_millis")]
    pub base_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_backoff: Duration::from_millis(250),
        }
    }
}

mod duration_millis {
    use super::Duration;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

/// Token bucket: `rate` tokens per second up to `burst`.
struct TokenBucket {
    rate: f64,
    burst: f64,
    tokens: f64,
    last: Instant,
}

impl TokenBucket {
    fn new(rate: f64, burst: f64) -> Self {
        TokenBucket {
            rate,
            burst,
            tokens: burst,
            last: Instant::now(),
        }
    }

    /// Time to wait before a token is available; consumes one when ready.
    fn acquire_delay(&mut self) -> Duration {
        let now = Instant::now();
        self.tokens = (self.tokens + now.duration_since(self.last).as_secs_f64() * self.rate)
            .min(self.burst);
        self.last = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            Duration::ZERO
        } else {
            Duration::from_secs_f64((1.0 - self.tokens) / self.rate)
        }
    }
}

/// Counting semaphore for the in-flight request cap.
struct Gate {
    slots: Mutex<u32>,
    available: Condvar,
}

impl Gate {
    fn new(cap: u32) -> Self {
        Gate {
            slots: Mutex::new(cap),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> GateGuard<'_> {
        let mut slots = self.slots.lock().expect("gate lock");
        while *slots == 0 {
            slots = self.available.wait(slots).expect("gate wait");
        }
        *slots -= 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.gate.slots.lock().expect("gate lock") += 1;
        self.gate.available.notify_one();
    }
}

/// One completed provider exchange, as recorded in the ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stock: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub week: Option<u32>,
    pub cache_key: String,
    pub prompt: String,
    pub response: String,
    pub attempts: u32,
    pub cache_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub response: ChatResponse,
    pub record: CallRecord,
}

pub struct CompletionClient {
    provider: Arc<dyn Provider>,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
    bucket: Option<Mutex<TokenBucket>>,
    gate: Option<Gate>,
    replay_only: bool,
    transport_calls: AtomicU64,
}

impl CompletionClient {
    pub fn new(provider: Arc<dyn Provider>) -> Self {
        CompletionClient {
            provider,
            cache: None,
            retry: RetryPolicy::default(),
            bucket: None,
            gate: None,
            replay_only: false,
            transport_calls: AtomicU64::new(0),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_rate_limit(mut self, per_second: f64, burst: u32) -> Self {
        self.bucket = Some(Mutex::new(TokenBucket::new(per_second, burst as f64)));
        self
    }

    pub fn with_inflight_cap(mut self, cap: u32) -> Self {
        self.gate = Some(Gate::new(cap.max(1)));
        self
    }

    /// Replay mode: serve from cache only; a miss is an error rather than a
    /// network call.
    pub fn replay_only(mut self) -> Self {
        self.replay_only = true;
        self
    }

    /// Transport attempts made so far (cache hits do not count).
    pub fn transport_calls(&self) -> u64 {
        self.transport_calls.load(Ordering::SeqCst)
    }

    pub fn provider_id(&self) -> &str {
        self.provider.id()
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<Completion, AgentError> {
        let key = cache_key(request);
        if let Some(cache) = &self.cache {
            if let Some(body) = cache.get(&key) {
                let response = self.provider.parse_body(&body)?;
                return Ok(self.completed(request, key, response, 0, true));
            }
        }
        if self.replay_only {
            return Err(AgentError::ReplayCacheMiss(key));
        }

        let mut last_err = None;
        for attempt in 1..=self.retry.attempts.max(1) {
            match self.attempt_transport(request) {
                Ok(body) => {
                    if let Some(cache) = &self.cache {
                        cache.put(&key, &body)?;
                    }
                    let response = self.provider.parse_body(&body)?;
                    return Ok(self.completed(request, key, response, attempt, false));
                }
                Err(err) if err.is_retryable() && attempt < self.retry.attempts => {
                    let backoff = self.retry.base_backoff * 2u32.pow(attempt - 1);
                    std::thread::sleep(backoff);
                    last_err = Some(err);
                }
                Err(err) => return Err(err),
            }
        }
        Err(last_err.unwrap_or_else(|| AgentError::Transport("no attempts made".to_string())))
    }

    fn attempt_transport(&self, request: &ChatRequest) -> Result<String, AgentError> {
        if let Some(bucket) = &self.bucket {
            loop {
                let delay = bucket.lock().expect("bucket lock").acquire_delay();
                if delay.is_zero() {
                    break;
                }
                std::thread::sleep(delay);
            }
        }
        let _slot = self.gate.as_ref().map(Gate::acquire);
        self.transport_calls.fetch_add(1, Ordering::SeqCst);
        self.provider.call_raw(request)
    }

    fn completed(
        &self,
        request: &ChatRequest,
        cache_key: String,
        response: ChatResponse,
        attempts: u32,
        cache_hit: bool,
    ) -> Completion {
        let record = CallRecord {
            role: request.tag.role.as_str().to_string(),
            stock: request.tag.stock.clone(),
            week: request.tag.week,
            cache_key,
            prompt: request.rendered_prompt(),
            response: response.content.clone(),
            attempts,
            cache_hit,
        };
        Completion { response, record }
    }
}
