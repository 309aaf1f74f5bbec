//! Serialize one stock-week into the three agent inputs (technical, news,
//! fundamental) and the joined data overview.
//!
//! ```bash
//! cargo run --example build_contexts
//! ```

use tristrat::context::{
    build_fund_input, build_news_input, build_overview, build_tech_input, ContextParams,
};
use tristrat::fixtures;
use tristrat::indicators::{indicator_table, IndicatorParams};
use tristrat::market_data::StockId;

fn main() -> anyhow::Result<()> {
    let fx = fixtures::six_by_eight();
    let calendar = fx.calendar()?;
    let data = fx.dataset();
    let stock = StockId::new("AAA")?;
    let week = 10; // late enough that the indicator warm-ups are behind us
    let params = ContextParams::default();

    let bars: Vec<_> = data.bars_for(&stock).into_iter().cloned().collect();
    let rows = indicator_table(&bars, &IndicatorParams::default())?;

    let tech = build_tech_input(week, &calendar, &rows, &params)?;
    let news = build_news_input(&stock, week, &calendar, data.news_for(&stock), &params)?;
    let fund = build_fund_input(&stock, week, &calendar, data.fundamentals_for(&stock), &params)?;

    println!("=== technical input (one line per trading day of weeks 6-9) ===");
    println!("{tech}\n");
    println!("=== news input (items from the week before week {week}) ===");
    println!("{news}\n");
    println!("=== fundamental input (newest four quarters released before week {week}) ===");
    println!("{fund}\n");

    let overview = build_overview(&stock, week, "news summary...", "tech summary...", "fund summary...");
    println!("=== overview skeleton the score agent receives ===");
    println!("{}", overview.text);

    // Everything above is dated strictly before week 5's first trading day.
    let first_day = calendar.week(week)?.first_day();
    println!("\nno-lookahead cutoff for week {week}: all lines dated before {first_day}");
    Ok(())
}
