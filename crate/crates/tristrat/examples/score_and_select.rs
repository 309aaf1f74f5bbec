//! The structured-output contracts: score parsing with a corrective retry,
//! and selector validation with deterministic repair of constraint
//! violations.
//!
//! ```bash
//! cargo run --example score_and_select
//! ```

use std::sync::Arc;

use tristrat::agents::{
    AgentSettings, AgentSuite, CompletionClient, PromptSet, ScoreReport, Strategy, StubContent,
    StubEntry, StubProvider, StubScript,
};
use tristrat::context::build_overview;
use tristrat::market_data::StockId;

fn suite_with(entries: Vec<StubEntry>) -> AgentSuite {
    let script = StubScript {
        responses: entries,
        ..Default::default()
    };
    AgentSuite::new(
        CompletionClient::new(Arc::new(StubProvider::new(script))),
        PromptSet::default(),
        AgentSettings::default(),
    )
}

fn entry(role: &str, content: StubContent) -> StubEntry {
    StubEntry {
        role: role.to_string(),
        stock: None,
        week: None,
        content,
        transport_failures: 0,
    }
}

fn main() -> anyhow::Result<()> {
    // 1. A scorer that replies out of range once, then corrects itself after
    //    the re-prompt quoting the violation.
    let bad = r#"{"financial_health": 11, "growth_potential": 6, "news_sentiment": 5,
                  "news_impact": 4, "price_momentum": 8, "volatility_risk": 3, "rationale": "oops"}"#;
    let good = r#"Here you go.
```json
{"financial_health": 7, "growth_potential": 6, "news_sentiment": 5,
 "news_impact": 4, "price_momentum": 8, "volatility_risk": 3, "rationale": "fixed"}
```"#;
    let suite = suite_with(vec![entry(
        "score",
        StubContent::Seq(vec![bad.to_string(), good.to_string()]),
    )]);
    let overview = build_overview(&StockId::new("AAA")?, 5, "news", "tech", "fund");
    let mut calls = Vec::new();
    let report = suite.score(&overview, &mut calls)?;
    println!("score after corrective retry: financial_health={}", report.financial_health);
    println!("calls made: {} (the second prompt quotes the violation)", calls.len());
    let retry_line = calls[1].prompt[calls[1].prompt.find("previous reply was invalid").unwrap()..]
        .lines()
        .next()
        .unwrap();
    println!("retry prompt excerpt: ...{retry_line}...\n");

    // 2. A selector that over-allocates across too many names, twice; the
    //    deterministic repair keeps the five largest weights and rescales.
    let tradable: Vec<StockId> = ["AAA", "BBB", "CCC", "DDD", "EEE", "FFF"]
        .iter()
        .map(|s| StockId::new(s).unwrap())
        .collect();
    let scores: Vec<ScoreReport> = tradable
        .iter()
        .map(|stock| ScoreReport {
            stock: stock.clone(),
            week: 5,
            financial_health: 7,
            growth_potential: 6,
            news_sentiment: 5,
            news_impact: 5,
            price_momentum: 6,
            volatility_risk: 4,
            rationale: "demo".to_string(),
        })
        .collect();
    let overweight =
        r#"{"AAA": 0.6, "BBB": 0.5, "CCC": 0.4, "DDD": 0.3, "EEE": 0.2, "FFF": 0.1}"#;
    let suite = suite_with(vec![entry(
        "select",
        StubContent::Seq(vec![overweight.to_string(), overweight.to_string()]),
    )]);
    let mut calls = Vec::new();
    let outcome = suite.select(&scores, &Strategy::initial(), &tradable, 5, &mut calls)?;
    println!("selector reply violated the constraints: {}", outcome.repaired.as_deref().unwrap_or("-"));
    println!("repaired portfolio (top five, rescaled to gross 1.0):");
    for (stock, weight) in outcome.portfolio.weights() {
        println!("  {stock}: {weight:.4}");
    }
    println!(
        "positions={} gross={:.6} cash={:.6}",
        outcome.portfolio.positions(),
        outcome.portfolio.gross_weight(),
        outcome.portfolio.cash_fraction()
    );

    // 3. An empty object is a legitimate all-cash stance.
    let suite = suite_with(vec![entry("select", StubContent::One("{}".to_string()))]);
    let mut calls = Vec::new();
    let outcome = suite.select(&scores, &Strategy::initial(), &tradable, 5, &mut calls)?;
    println!("\nempty reply -> all cash: {}", outcome.portfolio.is_all_cash());
    Ok(())
}
