//! Deterministic replay: a first run fills the content-addressed response
//! cache; a second run in replay mode serves every call from the cache,
//! issues zero transport calls, and reproduces the ledger byte for byte.
//!
//! ```bash
//! cargo run --example replay_run
//! ```

use std::sync::Arc;

use tristrat::agents::StubProvider;
use tristrat::fixtures;
use tristrat::pipeline::{
    DataConfig, OutputConfig, ProviderConfig, RunConfig, Runner, RunSettings,
};

fn config(fx: &fixtures::Fixture, out: &std::path::Path, cache: &std::path::Path) -> RunConfig {
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
        provider: ProviderConfig {
            cache_dir: Some(cache.to_path_buf()),
            ..Default::default()
        },
        output: OutputConfig {
            dir: out.to_path_buf(),
        },
    }
}

fn main() -> anyhow::Result<()> {
    let fx = fixtures::six_by_eight();
    let cache = tempfile::tempdir()?;
    let out_cold = tempfile::tempdir()?;
    let out_replay = tempfile::tempdir()?;

    // Cold run: every response comes from the provider and lands in the
    // cache, keyed by SHA-256 of (model, rendered prompt).
    let cold_config = config(&fx, out_cold.path(), cache.path());
    let provider = Arc::new(StubProvider::new(fx.stub_script()));
    let mut cold = Runner::new(&cold_config, fx.dataset(), Some(provider))?;
    cold.run()?;
    println!("cold run: {} transport calls", cold.transport_calls());
    let cached_files = std::fs::read_dir(cache.path())?.count();
    println!("cache now holds {cached_files} response bodies");

    // Replay run: an intentionally empty provider script proves nothing can
    // be served from anywhere but the cache.
    let mut replay_config = config(&fx, out_replay.path(), cache.path());
    replay_config.provider.replay = true;
    let empty = Arc::new(StubProvider::new(Default::default()));
    let mut replay = Runner::new(&replay_config, fx.dataset(), Some(empty))?;
    replay.run()?;
    println!("replay run: {} transport calls", replay.transport_calls());
    assert_eq!(replay.transport_calls(), 0);

    let a = std::fs::read(cold.ledger_path())?;
    let b = std::fs::read(replay.ledger_path())?;
    println!(
        "ledgers byte-identical: {} ({} bytes)",
        a == b,
        a.len()
    );
    assert_eq!(a, b);
    Ok(())
}
