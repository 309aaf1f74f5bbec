//! Watch the strategy refinement loop: each settled week appends a
//! (strategy, universe return, portfolio return) record to the bounded
//! history, and the strategy agent rewrites the policy from it.
//!
//! ```bash
//! cargo run --example strategy_evolution
//! ```

use std::sync::Arc;

use tristrat::agents::StubProvider;
use tristrat::fixtures;
use tristrat::history::signed_pct;
use tristrat::pipeline::{
    read_ledger, DataConfig, OutputConfig, ProviderConfig, RunConfig, Runner, RunSettings,
};

fn main() -> anyhow::Result<()> {
    let fx = fixtures::six_stocks(17); // 13 evaluated weeks, enough to fill K=10
    let out = tempfile::tempdir()?;
    let config = RunConfig {
        data: DataConfig {
            bars: "in-memory".into(),
            news: None,
            fundamentals: None,
            start: fx.range.start,
            end: fx.range.end,
            universe: fx.universe.iter().map(|s| s.as_str().to_string()).collect(),
            universe_file: None,
        },
        run: RunSettings::default(),
        indicators: Default::default(),
        context: Default::default(),
        provider: ProviderConfig::default(),
        output: OutputConfig {
            dir: out.path().to_path_buf(),
        },
    };
    let mut runner = Runner::new(
        &config,
        fx.dataset(),
        Some(Arc::new(StubProvider::new(fx.stub_script()))),
    )?;
    runner.run()?;

    let (_, weeks) = read_ledger(&runner.ledger_path())?;
    println!("strategy in force per week (first line each):\n");
    for record in &weeks {
        println!(
            "week {:>2} ({} / {} portfolio): {}",
            record.week,
            signed_pct(record.universe_avg_return),
            signed_pct(record.portfolio_return),
            record.strategy.lines().next().unwrap_or_default()
        );
    }

    // The trajectory the strategy agent saw in the final week: capped at the
    // last K = 10 records, oldest first.
    let last = weeks.last().unwrap();
    let strategy_call = last.calls.iter().find(|c| c.role == "strategy").unwrap();
    let blocks = strategy_call.prompt.matches("universe average return:").count();
    println!("\nfinal refinement prompt embedded {blocks} history blocks (K = 10)");
    println!(
        "history held {} records after {} evaluated weeks",
        runner.state().history.len(),
        weeks.len()
    );
    Ok(())
}
