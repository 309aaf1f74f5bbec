//! Configure a live run against an OpenAI-compatible chat-completions
//! endpoint. Without a credential this prints the setup and exits; with
//! `TRISTRAT_API_KEY` set it sends one real scoring call.
//!
//! ```bash
//! TRISTRAT_API_KEY=... TRISTRAT_BASE_URL=https://api.openai.com/v1 \
//!     cargo run --example live_endpoint
//! ```

use std::sync::Arc;
use std::time::Duration;

use tristrat::agents::{
    AgentSettings, AgentSuite, CompletionClient, HttpProvider, PromptSet, ResponseCache,
    RetryPolicy, API_KEY_ENV,
};
use tristrat::context::build_overview;
use tristrat::market_data::StockId;

const EXAMPLE_CONFIG: &str = r#"[provider]
kind = "http"
base_url = "https://api.openai.com/v1"   # any chat-completions endpoint
model = "gpt-4o"
temperature = 0.0
max_tokens = 1024
concurrency = 4
rate_limit_per_sec = 2.0
cache_dir = ".tristrat-cache"            # enables re-runs without re-billing
"#;

fn main() -> anyhow::Result<()> {
    let Ok(api_key) = std::env::var(API_KEY_ENV) else {
        println!("{API_KEY_ENV} is not set; showing the configuration instead of calling out.\n");
        println!("put this in your run TOML (the CLI reads the key from {API_KEY_ENV}):\n");
        println!("{EXAMPLE_CONFIG}");
        println!("then: tristrat backtest --config run.toml --agents");
        return Ok(());
    };
    let base_url = std::env::var("TRISTRAT_BASE_URL")
        .unwrap_or_else(|_| "https://api.openai.com/v1".to_string());
    let model = std::env::var("TRISTRAT_MODEL").unwrap_or_else(|_| "gpt-4o".to_string());

    let cache_dir = tempfile::tempdir()?;
    let provider = HttpProvider::new(base_url, Some(api_key), Duration::from_secs(60))?;
    let client = CompletionClient::new(Arc::new(provider))
        .with_cache(ResponseCache::open(cache_dir.path())?)
        .with_retry(RetryPolicy::default())
        .with_rate_limit(2.0, 2)
        .with_inflight_cap(2);
    let suite = AgentSuite::new(
        client,
        PromptSet::default(),
        AgentSettings {
            model,
            ..Default::default()
        },
    );

    let overview = build_overview(
        &StockId::new("AAPL")?,
        5,
        "Coverage was sparse; one upbeat supply-chain note with limited reach.",
        "Price ground sideways under the 20-day average; RSI near 45, bands tightening.",
        "Revenue flat quarter over quarter, margins steady, cash position strong.",
    );
    let mut calls = Vec::new();
    let report = suite.score(&overview, &mut calls)?;
    println!("live score for {} week {}:", report.stock, report.week);
    for (name, value) in report.dimensions() {
        println!("  {name}: {value}");
    }
    println!("  rationale: {}", report.rationale);
    println!("\ntransport calls: {}", suite.client().transport_calls());
    Ok(())
}
