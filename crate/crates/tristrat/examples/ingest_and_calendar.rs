//! Load canonical data files, validate them, and partition the bar history
//! into trading weeks.
//!
//! ```bash
//! cargo run --example ingest_and_calendar
//! ```

use tristrat::backtest::tradable_universe;
use tristrat::fixtures;
use tristrat::market_data::{load_daily_bars, load_fundamentals, load_news, TradingCalendar};

fn main() -> anyhow::Result<()> {
    // Write a synthetic market to disk, then load it back the way `tristrat
    // ingest` would: CSV bars plus JSONL news and fundamentals.
    let dir = tempfile::tempdir()?;
    let fx = fixtures::fixture(
        &["AAA", "BBB", "CCC", "DDD", "EEE", "FFF"],
        6,
        &[("FFF", "2022-05-30")], // FFF misses the Monday of week 3
    );
    let paths = fx.write_files(dir.path())?;

    let bars = load_daily_bars(std::fs::File::open(&paths.bars)?)?;
    let news = load_news(std::fs::File::open(&paths.news)?)?;
    let fundamentals = load_fundamentals(std::fs::File::open(&paths.fundamentals)?)?;
    println!(
        "loaded {} bars, {} news items, {} fundamental reports",
        bars.len(),
        news.len(),
        fundamentals.len()
    );

    let calendar = TradingCalendar::build(&bars, fx.range)?;
    let data = fx.dataset();
    println!("\ntrading weeks:");
    for week in calendar.weeks() {
        let (tradable, excluded) = tradable_universe(&fx.universe, week, &data);
        println!(
            "  week {:>2}: {} .. {} ({} trading days, {} tradable{})",
            week.index,
            week.first_day(),
            week.last_day(),
            week.trading_days.len(),
            tradable.len(),
            if excluded.is_empty() {
                String::new()
            } else {
                format!(
                    ", excluded: {}",
                    excluded
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            }
        );
    }

    // The four-week lookback window that feeds week 5's technical input.
    let window = calendar.week_slice(5, 4)?;
    println!(
        "\nweek 5 looks back over weeks {:?}",
        window.iter().map(|w| w.index).collect::<Vec<_>>()
    );
    Ok(())
}
