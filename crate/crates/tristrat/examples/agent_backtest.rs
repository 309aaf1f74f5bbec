//! The full weekly agent loop on a scripted stub provider: contexts, three
//! analyses and a score per stock, selection under the current strategy,
//! settlement, and strategy refinement. Writes report.json, equity.csv, and
//! ledger.jsonl.
//!
//! ```bash
//! cargo run --example agent_backtest
//! ```

use std::sync::Arc;

use tristrat::agents::StubProvider;
use tristrat::fixtures;
use tristrat::pipeline::{
    read_ledger, DataConfig, OutputConfig, ProviderConfig, RunConfig, Runner, RunSettings,
};

fn main() -> anyhow::Result<()> {
    let fx = fixtures::six_by_eight();
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
        provider: ProviderConfig {
            concurrency: 4,
            ..Default::default()
        },
        output: OutputConfig {
            dir: out.path().to_path_buf(),
        },
    };

    // The stub provider replays scripted responses keyed by (role, stock,
    // week); in production the same runner talks to a chat endpoint.
    let provider = Arc::new(StubProvider::new(fx.stub_script()));
    let mut runner = Runner::new(&config, fx.dataset(), Some(provider))?;

    println!("running {} evaluated weeks...\n", runner.remaining_weeks());
    while let Some(summary) = runner.step()? {
        println!(
            "week {:>2} | return {:+.3}% | wealth {:.5} | positions {}",
            summary.week,
            summary.portfolio_return * 100.0,
            summary.wealth,
            summary.positions
        );
    }
    let report = runner.write_outputs()?;

    println!("\nmetrics over {} weeks:", report.metrics.weeks);
    println!("  accumulated return: {:+.3}%", report.metrics.accumulated_return * 100.0);
    println!("  sharpe: {}", report.metrics.sharpe.map(|v| format!("{v:.4}")).unwrap_or("n/a".into()));
    println!("  calmar: {}", report.metrics.calmar.map(|v| format!("{v:.4}")).unwrap_or("n/a".into()));
    println!("  max drawdown: {:+.3}%", report.metrics.max_drawdown * 100.0);
    println!("  transport calls: {}", runner.transport_calls());

    // Every prompt and response of every week is in the ledger.
    let (_, weeks) = read_ledger(&runner.ledger_path())?;
    let first = &weeks[0];
    println!(
        "\nledger week {} holds {} agent calls; the selector saw {} score reports",
        first.week,
        first.calls.len(),
        first.tradable.len()
    );
    let strategy_call = first.calls.iter().find(|c| c.role == "strategy").unwrap();
    println!(
        "refined strategy after week {}:\n  {}",
        first.week,
        strategy_call.response.lines().next().unwrap_or_default()
    );
    Ok(())
}
