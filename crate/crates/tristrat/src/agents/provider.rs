//! Chat-completion providers: the OpenAI-compatible HTTP transport and the
//! deterministic scripted stub used by tests, examples, and offline runs.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{AgentError, AgentRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageRole {
    System,
    User,
    Assistant,
}

impl MessageRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            MessageRole::System => "system",
            MessageRole::User => "user",
            MessageRole::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: MessageRole,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: MessageRole::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: MessageRole::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message {
            role: MessageRole::Assistant,
            content: content.into(),
        }
    }
}

/// Which agent issued a call, for stub routing and the ledger. Not part of
/// the wire request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallTag {
    pub role: AgentRole,
    pub stock: Option<String>,
    pub week: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub tag: CallTag,
}

impl ChatRequest {
    pub fn new(
        model: impl Into<String>,
        messages: Vec<Message>,
        temperature: f64,
        max_tokens: u32,
        tag: CallTag,
    ) -> Result<Self, AgentError> {
        if messages.is_empty() {
            return Err(AgentError::EmptyMessages);
        }
        if !(0.0..=2.0).contains(&temperature) || !temperature.is_finite() {
            return Err(AgentError::InvalidTemperature(temperature));
        }
        Ok(ChatRequest {
            model: model.into(),
            messages,
            temperature,
            max_tokens,
            tag,
        })
    }

    /// Deterministic rendering of the full prompt, used for cache keys and
    /// the ledger.
    pub fn rendered_prompt(&self) -> String {
        self.messages
            .iter()
            .map(|m| format!("[{}]\n{}", m.role.as_str(), m.content))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub content: String,
    pub provider_id: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

/// A chat-completion backend. `call_raw` performs one transport attempt and
/// returns the raw response body; `parse_body` turns a raw body (fresh or
/// cached) into a response.
pub trait Provider: Send + Sync {
    fn id(&self) -> &str;
    fn call_raw(&self, request: &ChatRequest) -> Result<String, AgentError>;
    fn parse_body(&self, body: &str) -> Result<ChatResponse, AgentError>;
}

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP provider
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
}

#[derive(Deserialize)]
struct WireChoiceMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: Option<u64>,
    #[serde(default)]
    completion_tokens: Option<u64>,
}

/// Client for any endpoint speaking the chat-completions protocol: POST
/// `{base_url}/chat/completions`, response content at
/// `choices[0].message.content`.
pub struct HttpProvider {
    base_url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(
        base_url: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, AgentError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        Ok(HttpProvider {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            client,
        })
    }
}

impl Provider for HttpProvider {
    fn id(&self) -> &str {
        "http"
    }

    fn call_raw(&self, request: &ChatRequest) -> Result<String, AgentError> {
        let body = WireRequest {
            model: &request.model,
            messages: request
                .messages
                .iter()
                .map(|m| WireMessage {
                    role: m.role.as_str(),
                    content: &m.content,
                })
                .collect(),
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let url = format!("{}/chat/completions", self.base_url);
        let mut builder = self
            .client
            .post(&url)
            .header("content-type", "application/json")
            .body(serde_json::to_string(&body).expect("wire request serializes"));
        if let Some(key) = &self.api_key {
            builder = builder.header("authorization", format!("Bearer {key}"));
        }
        let response = builder.send().map_err(|e| {
            if e.is_timeout() {
                AgentError::Timeout(e.to_string())
            } else {
                AgentError::Transport(e.to_string())
            }
        })?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err(AgentError::Auth(format!("{status}: {text}")));
        }
        if !status.is_success() {
            return Err(AgentError::Transport(format!("{status}: {text}")));
        }
        Ok(text)
    }

    fn parse_body(&self, body: &str) -> Result<ChatResponse, AgentError> {
        let wire: WireResponse = serde_json::from_str(body)
            .map_err(|e| AgentError::MalformedPayload(e.to_string()))?;
        let choice = wire
            .choices
            .first()
            .ok_or_else(|| AgentError::MalformedPayload("no choices in response".to_string()))?;
        let content = choice
            .message
            .content
            .clone()
            .ok_or_else(|| AgentError::MalformedPayload("choices[0].message.content is null".to_string()))?;
        let (pt, ct) = wire
            .usage
            .map(|u| (u.prompt_tokens, u.completion_tokens))
            .unwrap_or((None, None));
        Ok(ChatResponse {
            content,
            provider_id: "http".to_string(),
            prompt_tokens: pt,
            completion_tokens: ct,
        })
    }
}

// ---------------------------------------------------------------------------
// Deterministic stub provider
// ---------------------------------------------------------------------------

/// One scripted response: a single text or a sequence consumed call by call
/// (the last entry repeats once the sequence is exhausted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StubContent {
    One(String),
    Seq(Vec<String>),
}

impl StubContent {
    fn into_queue(self) -> VecDeque<String> {
        match self {
            StubContent::One(s) => VecDeque::from([s]),
            StubContent::Seq(v) => VecDeque::from(v),
        }
    }
}

/// Scripted response keyed by (role, stock, week); omitted stock/week act as
/// wildcards at lookup time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubEntry {
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stock: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub week: Option<u32>,
    pub content: StubContent,
    /// Injected transport failures before the content is served.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub transport_failures: u32,
}

fn is_zero(n: &u32) -> bool {
    *n == 0
}

/// Fixture-file form of the stub script.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StubScript {
    #[serde(default)]
    pub responses: Vec<StubEntry>,
    /// Fallback responses by role name when no keyed entry matches.
    #[serde(default)]
    pub defaults: BTreeMap<String, String>,
    /// Responses keyed by the request's cache hash, for hash-addressed tests.
    #[serde(default)]
    pub by_hash: BTreeMap<String, String>,
}

impl StubScript {
    pub fn from_file(path: &Path) -> Result<Self, AgentError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            AgentError::MalformedPayload(format!("stub script {}: {e}", path.display()))
        })
    }
}

type StubKey = (String, Option<String>, Option<u32>);

struct StubState {
    pending_failures: u32,
    queue: VecDeque<String>,
}

/// Deterministic scripted provider. Responses are looked up by
/// (role, stock, week) with wildcard fallbacks, then by role default, then by
/// request hash.
pub struct StubProvider {
    entries: Mutex<HashMap<StubKey, StubState>>,
    defaults: BTreeMap<String, String>,
    by_hash: BTreeMap<String, String>,
}

impl StubProvider {
    pub fn new(script: StubScript) -> Self {
        let mut entries = HashMap::new();
        for entry in script.responses {
            entries.insert(
                (entry.role.clone(), entry.stock.clone(), entry.week),
                StubState {
                    pending_failures: entry.transport_failures,
                    queue: entry.content.into_queue(),
                },
            );
        }
        StubProvider {
            entries: Mutex::new(entries),
            defaults: script.defaults,
            by_hash: script.by_hash,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, AgentError> {
        Ok(Self::new(StubScript::from_file(path)?))
    }

    /// Stub with a single fallback response per role.
    pub fn with_defaults<I, K, V>(defaults: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self::new(StubScript {
            defaults: defaults
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
            ..Default::default()
        })
    }

    fn next_for_key(&self, key: &StubKey) -> Option<Result<String, AgentError>> {
        let mut entries = self.entries.lock().expect("stub lock");
        let state = entries.get_mut(key)?;
        if state.pending_failures > 0 {
            state.pending_failures -= 1;
            return Some(Err(AgentError::Transport(format!(
                "injected failure for {key:?}"
            ))));
        }
        let next = if state.queue.len() > 1 {
            state.queue.pop_front()
        } else {
            state.queue.front().cloned()
        };
        next.map(Ok)
    }
}

impl Provider for StubProvider {
    fn id(&self) -> &str {
        "stub"
    }

    fn call_raw(&self, request: &ChatRequest) -> Result<String, AgentError> {
        let tag = &request.tag;
        let role = tag.role.as_str().to_string();
        let candidates = [
            (role.clone(), tag.stock.clone(), tag.week),
            (role.clone(), tag.stock.clone(), None),
            (role.clone(), None, tag.week),
            (role.clone(), None, None),
        ];
        for key in candidates {
            if let Some(result) = self.next_for_key(&key) {
                return result;
            }
        }
        if let Some(content) = self.defaults.get(&role) {
            return Ok(content.clone());
        }
        let hash = super::client::cache_key(request);
        if let Some(content) = self.by_hash.get(&hash) {
            return Ok(content.clone());
        }
        Err(AgentError::NoScriptedResponse {
            role,
            stock: tag.stock.clone(),
            week: tag.week,
        })
    }

    fn parse_body(&self, body: &str) -> Result<ChatResponse, AgentError> {
        Ok(ChatResponse {
            content: body.to_string(),
            provider_id: "stub".to_string(),
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}
