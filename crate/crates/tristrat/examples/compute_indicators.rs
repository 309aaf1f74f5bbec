//! Compute SMA, ATR, RSI, MACD, and Bollinger Bands over a daily bar series.
//!
//! ```bash
//! cargo run --example compute_indicators
//! ```

use tristrat::fixtures::random_bars;
use tristrat::indicators::{indicator_table, IndicatorParams};

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:>9.4}")).unwrap_or_else(|| "     --  ".to_string())
}

fn main() -> anyhow::Result<()> {
    let bars = random_bars(42, 60);
    let params = IndicatorParams::default();
    let rows = indicator_table(&bars, &params)?;

    println!(
        "{:>3} {:<10} {:>8}  {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "#", "date", "close", "sma20", "atr14", "rsi14", "macd", "boll_lo", "boll_hi"
    );
    for (i, row) in rows.iter().enumerate() {
        println!(
            "{i:>3} {:<10} {:>8.2}  {} {} {} {} {} {}",
            row.date,
            row.close,
            fmt(row.sma),
            fmt(row.atr),
            fmt(row.rsi),
            fmt(row.macd_line),
            fmt(row.boll_lower),
            fmt(row.boll_upper),
        );
    }
    println!("\nwarm-up entries print as -- : values are absent, never zero-filled.");

    // The no-lookahead guarantee in action: recomputing on a prefix leaves
    // every earlier row untouched.
    let prefix = indicator_table(&bars[..40], &params)?;
    assert_eq!(&rows[..40], &prefix[..]);
    println!("prefix recomputation check passed: outputs at day d depend only on bars <= d.");
    Ok(())
}
