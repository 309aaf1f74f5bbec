//! Crash-resume: stop a run partway through, rebuild the state from the
//! ledger alone, and finish with results identical to an uninterrupted run.
//!
//! ```bash
//! cargo run --example crash_resume
//! ```

use std::sync::Arc;

use tristrat::agents::StubProvider;
use tristrat::fixtures;
use tristrat::pipeline::{
    DataConfig, OutputConfig, ProviderConfig, RunConfig, Runner, RunSettings,
};

fn config(fx: &fixtures::Fixture, out: &std::path::Path) -> RunConfig {
    RunConfig {
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
            dir: out.to_path_buf(),
        },
    }
}

fn main() -> anyhow::Result<()> {
    let fx = fixtures::six_by_eight();

    // Reference: the uninterrupted 8-week run.
    let out_full = tempfile::tempdir()?;
    let mut full = Runner::new(
        &config(&fx, out_full.path()),
        fx.dataset(),
        Some(Arc::new(StubProvider::new(fx.stub_script()))),
    )?;
    full.run()?;
    let full_report = full.write_outputs()?;

    // Crash: the process dies after week 5 of 8. The ledger has flushed one
    // line per completed week, so nothing else is needed to come back.
    let out_crash = tempfile::tempdir()?;
    let mut interrupted = Runner::new(
        &config(&fx, out_crash.path()),
        fx.dataset(),
        Some(Arc::new(StubProvider::new(fx.stub_script()))),
    )?;
    for _ in 0..5 {
        interrupted.step()?;
    }
    println!(
        "simulated crash after week {} (eval {} of 8)",
        interrupted.state().next_week - 1,
        interrupted.state().eval_count
    );
    drop(interrupted);

    // Resume: state (equity, strategy history, current strategy) rebuilds
    // from the ledger, then the remaining weeks run.
    let mut resumed = Runner::resume(
        &config(&fx, out_crash.path()),
        fx.dataset(),
        Some(Arc::new(StubProvider::new(fx.stub_script()))),
    )?;
    println!(
        "resumed with {} weeks of history, wealth {:.6}, {} weeks remaining",
        resumed.state().history.len(),
        resumed.state().equity.latest(),
        resumed.remaining_weeks()
    );
    resumed.run()?;
    let resumed_report = resumed.write_outputs()?;

    println!(
        "final AR: full {:+.4}% vs resumed {:+.4}%",
        full_report.metrics.accumulated_return * 100.0,
        resumed_report.metrics.accumulated_return * 100.0
    );
    assert_eq!(full_report, resumed_report);
    let identical = std::fs::read(full.ledger_path())? == std::fs::read(resumed.ledger_path())?;
    println!("reports equal, ledgers byte-identical: {identical}");
    assert!(identical);
    Ok(())
}
