//! Run configuration: TOML file format, validation, and provider assembly.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    AgentError, AgentSettings, CompletionClient, HttpProvider, Provider, ResponseCache,
    RetryPolicy, StubProvider, StubScript, API_KEY_ENV,
};
use crate::baselines::Baseline;
use crate::context::ContextParams;
use crate::indicators::IndicatorParams;
use crate::market_data::{DateRange, StockId};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Whether the run is driven by the agent loop or a rule-based baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Agents,
    Baseline(Baseline),
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Agents => "agents",
            RunMode::Baseline(b) => b.as_str(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s.eq_ignore_ascii_case("agents") {
            return Some(RunMode::Agents);
        }
        Baseline::parse(s).map(RunMode::Baseline)
    }
}

impl Serialize for RunMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RunMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        RunMode::parse(&raw).ok_or_else(|| {
            serde::de::Error::custom(format!(
                "unknown mode {raw:?}: expected agents, 1n, sma, macd, or boll"
            ))
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataConfig {
    pub bars: PathBuf,
    #[serde(default)]
    pub news: Option<PathBuf>,
    #[serde(default)]
    pub fundamentals: Option<PathBuf>,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Candidate tickers, inline.
    #[serde(default)]
    pub universe: Vec<String>,
    /// Alternative: file with one ticker per line (# comments allowed).
    #[serde(default)]
    pub universe_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub mode: RunMode,
    /// Strategy-history capacity K.
    pub history_capacity: usize,
    pub max_positions: usize,
    /// Per-side transaction cost in basis points; zero by default.
    pub transaction_cost_bps: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            mode: RunMode::Agents,
            history_capacity: 10,
            max_positions: 5,
            transaction_cost_bps: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Stub,
    Http,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub model: String,
    /// Chat-completions endpoint base URL (http kind).
    pub base_url: Option<String>,
    /// Credential; falls back to the TRISTRAT_API_KEY environment variable.
    pub api_key: Option<String>,
    /// Stub script fixture file (stub kind).
    pub script: Option<PathBuf>,
    pub temperature: f64,
    pub max_tokens: u32,
    /// In-flight cap and per-stock fan-out width.
    pub concurrency: usize,
    pub rate_limit_per_sec: Option<f64>,
    pub cache_dir: Option<PathBuf>,
    pub retry_attempts: u32,
    pub retry_backoff_ms: u64,
    pub timeout_secs: u64,
    /// Serve strictly from the cache; misses become errors.
    pub replay: bool,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Stub,
            model: "stub-v1".to_string(),
            base_url: None,
            api_key: None,
            script: None,
            temperature: 0.0,
            max_tokens: 1024,
            concurrency: 4,
            rate_limit_per_sec: None,
            cache_dir: None,
            retry_attempts: 3,
            retry_backoff_ms: 250,
            timeout_secs: 60,
            replay: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

/// Everything a run needs, loadable from one TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default)]
    pub indicators: IndicatorParams,
    #[serde(default)]
    pub context: ContextParams,
    #[serde(default)]
    pub provider: ProviderConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.data.start > self.data.end {
            return Err(ConfigError::Invalid(format!(
                "date range starts {} after it ends {}",
                self.data.start, self.data.end
            )));
        }
        if self.run.history_capacity == 0 {
            return Err(ConfigError::Invalid("history_capacity must be >= 1".into()));
        }
        if self.run.max_positions == 0 {
            return Err(ConfigError::Invalid("max_positions must be >= 1".into()));
        }
        if self.context.lookback_weeks == 0 {
            return Err(ConfigError::Invalid("lookback_weeks must be >= 1".into()));
        }
        if self.data.universe.is_empty() && self.data.universe_file.is_none() {
            return Err(ConfigError::Invalid(
                "no universe: set data.universe or data.universe_file".into(),
            ));
        }
        self.indicators
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(0.0..=2.0).contains(&self.provider.temperature) {
            return Err(ConfigError::Invalid(format!(
                "temperature {} outside [0, 2]",
                self.provider.temperature
            )));
        }
        Ok(())
    }

    pub fn range(&self) -> DateRange {
        DateRange::new(self.data.start, self.data.end)
    }

    /// The candidate universe, sorted and deduplicated.
    pub fn load_universe(&self) -> Result<Vec<StockId>, ConfigError> {
        let mut symbols: Vec<String> = self.data.universe.clone();
        if let Some(path) = &self.data.universe_file {
            let text = std::fs::read_to_string(path)?;
            symbols.extend(
                text.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(String::from),
            );
        }
        let mut universe = symbols
            .iter()
            .map(|s| StockId::new(s).map_err(|e| ConfigError::Invalid(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        universe.sort();
        universe.dedup();
        if universe.is_empty() {
            return Err(ConfigError::Invalid("universe is empty".into()));
        }
        Ok(universe)
    }

    pub fn agent_settings(&self) -> AgentSettings {
        AgentSettings {
            model: self.provider.model.clone(),
            temperature: self.provider.temperature,
            max_tokens: self.provider.max_tokens,
            max_positions: self.run.max_positions,
        }
    }

    /// Builds the configured provider. `override_provider` substitutes an
    /// in-memory provider (tests and examples inject scripted stubs there).
    pub fn build_client(
        &self,
        override_provider: Option<Arc<dyn Provider>>,
    ) -> Result<CompletionClient, ConfigError> {
        let provider: Arc<dyn Provider> = match override_provider {
            Some(p) => p,
            None => match self.provider.kind {
                ProviderKind::Stub => {
                    let script = match &self.provider.script {
                        Some(path) => StubScript::from_file(path)?,
                        None => StubScript::default(),
                    };
                    Arc::new(StubProvider::new(script))
                }
                ProviderKind::Http => {
                    let base_url = self.provider.base_url.clone().ok_or_else(|| {
                        ConfigError::Invalid("provider.base_url required for http".into())
                    })?;
                    let api_key = self
                        .provider
                        .api_key
                        .clone()
                        .or_else(|| std::env::var(API_KEY_ENV).ok());
                    if api_key.is_none() && !self.provider.replay {
                        return Err(ConfigError::Agent(AgentError::MissingApiKey));
                    }
                    Arc::new(HttpProvider::new(
                        base_url,
                        api_key,
                        Duration::from_secs(self.provider.timeout_secs),
                    )?)
                }
            },
        };

        let mut client = CompletionClient::new(provider)
            .with_retry(RetryPolicy {
                attempts: self.provider.retry_attempts,
                base_backoff: Duration::from_millis(self.provider.retry_backoff_ms),
            })
            .with_inflight_cap(self.provider.concurrency as u32);
        if let Some(rate) = self.provider.rate_limit_per_sec {
            client = client.with_rate_limit(rate, self.provider.concurrency as u32);
        }
        if let Some(dir) = &self.provider.cache_dir {
            client = client.with_cache(ResponseCache::open(dir)?);
        }
        if self.provider.replay {
            if self.provider.cache_dir.is_none() {
                return Err(ConfigError::Invalid(
                    "replay mode needs provider.cache_dir".into(),
                ));
            }
            client = client.replay_only();
        }
        Ok(client)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_toml() -> String {
        r#"
[data]
bars = "bars.csv"
start = "2022-05-16"
end = "2022-08-07"
universe = ["AAA", "BBB"]

[run]
mode = "agents"
"#
        .to_string()
    }

    #[test]
    fn parses_minimal_toml_with_defaults() {
        let config: RunConfig = toml::from_str(&minimal_toml()).unwrap();
        config.validate().unwrap();
        assert_eq!(config.run.history_capacity, 10);
        assert_eq!(config.run.max_positions, 5);
        assert_eq!(config.context.lookback_weeks, 4);
        assert_eq!(config.indicators.sma_window, 20);
        assert!(matches!(config.run.mode, RunMode::Agents));
        assert!(matches!(config.provider.kind, ProviderKind::Stub));
    }

    #[test]
    fn mode_strings_round_trip() {
        for (text, mode) in [
            ("agents", RunMode::Agents),
            ("1n", RunMode::Baseline(Baseline::EqualWeight)),
            ("sma", RunMode::Baseline(Baseline::Sma)),
            ("macd", RunMode::Baseline(Baseline::Macd)),
            ("boll", RunMode::Baseline(Baseline::Boll)),
        ] {
            assert_eq!(RunMode::parse(text), Some(mode));
            assert_eq!(mode.as_str(), text);
        }
        assert_eq!(RunMode::parse("lstm"), None);
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut config: RunConfig = toml::from_str(&minimal_toml()).unwrap();
        config.data.end = "2022-01-01".parse().unwrap();
        assert!(config.validate().is_err());

        let mut config: RunConfig = toml::from_str(&minimal_toml()).unwrap();
        config.run.history_capacity = 0;
        assert!(config.validate().is_err());

        let mut config: RunConfig = toml::from_str(&minimal_toml()).unwrap();
        config.data.universe.clear();
        assert!(config.validate().is_err());

        let mut config: RunConfig = toml::from_str(&minimal_toml()).unwrap();
        config.indicators.macd_fast = 30;
        assert!(config.validate().is_err());
    }

    #[test]
    fn universe_loads_sorted_from_inline_and_file() {
        let tmp = tempfile::tempdir().unwrap();
        let list = tmp.path().join("universe.txt");
        std::fs::write(&list, "# comment\nZZZ\nMMM\n\n").unwrap();
        let mut config: RunConfig = toml::from_str(&minimal_toml()).unwrap();
        config.data.universe_file = Some(list);
        let universe = config.load_universe().unwrap();
        let symbols: Vec<&str> = universe.iter().map(StockId::as_str).collect();
        assert_eq!(symbols, vec!["AAA", "BBB", "MMM", "ZZZ"]);
    }

    #[test]
    fn http_without_key_fails_fast_unless_replay() {
        let mut config: RunConfig = toml::from_str(&minimal_toml()).unwrap();
        config.provider.kind = ProviderKind::Http;
        config.provider.base_url = Some("http://localhost:1".to_string());
        // The environment variable may not leak into this test.
        std::env::remove_var(API_KEY_ENV);
        let err = match config.build_client(None) {
            Err(e) => e,
            Ok(_) => panic!("expected missing-key error"),
        };
        assert!(err.to_string().contains(API_KEY_ENV));

        let tmp = tempfile::tempdir().unwrap();
        config.provider.replay = true;
        config.provider.cache_dir = Some(tmp.path().to_path_buf());
        let client = config.build_client(None).unwrap();
        assert_eq!(client.provider_id(), "http");
    }
}
