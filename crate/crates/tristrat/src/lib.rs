//! Weekly stock-portfolio backtesting with an LLM agent loop.
//!
//! Each trading week, the pipeline serializes every candidate stock's recent
//! signals into three text inputs (news, technicals, fundamentals), has three
//! analysis agents summarize them, condenses the summaries into six 1-10
//! dimension scores, selects a portfolio of at most five names under a
//! natural-language strategy, settles it open-to-close over the week, and
//! refines the strategy from realized returns. Rule-based baselines (1/N and
//! indicator-factor top-5 portfolios) run through the identical calendar,
//! settlement, and metrics paths.
//!
//! Every run writes an append-only ledger holding each prompt, response,
//! portfolio, and return, sufficient for crash resume and bit-exact replay. A
//! deterministic scripted stub stands in for the chat endpoint in tests and
//! examples; live runs talk to any OpenAI-compatible chat-completions
//! endpoint with retries, an in-flight cap, rate limiting, and a
//! content-addressed response cache.
//!
//! ## Examples
//!
//! The `examples/` directory is the guided tour; each one runs offline:
//!
//! ```text
//! cargo run --example ingest_and_calendar   # load files, trading weeks, tradable sets
//! cargo run --example compute_indicators   # SMA/ATR/RSI/MACD/BOLL with warm-up handling
//! cargo run --example build_contexts       # the three agent inputs for one stock-week
//! cargo run --example score_and_select     # structured output, retry, constraint repair
//! cargo run --example compute_metrics      # AR / Sharpe / Calmar / max drawdown
//! cargo run --example baseline_backtest    # 1/N and factor baselines, metrics table
//! cargo run --example agent_backtest       # the full weekly loop on a scripted stub
//! cargo run --example strategy_evolution   # the K=10 history feeding refinement
//! cargo run --example replay_run           # warm-cache replay, zero network calls
//! cargo run --example crash_resume         # resume from the ledger mid-run
//! cargo run --example live_endpoint        # wiring a real chat-completions endpoint
//! ```
//!
//! The `tristrat` binary wraps ingestion, backtests, and reporting for shell
//! use; see the README.

pub mod agents;
pub mod backtest;
pub mod baselines;
pub mod cli;
pub mod context;
pub mod fixtures;
pub mod history;
pub mod indicators;
pub mod market_data;
pub mod metrics;
pub mod pipeline;
pub mod portfolio;

pub use metrics::MetricsReport;
pub use pipeline::{RunConfig, Runner};
pub use portfolio::Portfolio;
