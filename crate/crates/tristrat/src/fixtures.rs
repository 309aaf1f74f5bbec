//! Deterministic synthetic fixtures: bar/news/fundamental data, file export,
//! and a fully scripted stub provider covering every agent call of a run.
//!
//! All generation is closed-form arithmetic over (stock index, day index,
//! week index), so tests can recompute any expected value independently.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{StubContent, StubEntry, StubScript};
use crate::market_data::{
    write_daily_bars, write_fundamentals, write_news, DailyBar, DataError, Dataset, DateRange,
    FiscalQuarter, FundamentalReport, NewsItem, StockId, TradingCalendar,
};

/// Default fixture start date, a Monday.
pub const FIXTURE_START: &str = "2022-05-16";

/// A self-contained synthetic market: bars, news, fundamentals, and the
/// universe they cover.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub universe: Vec<StockId>,
    pub bars: Vec<DailyBar>,
    pub news: Vec<NewsItem>,
    pub fundamentals: Vec<FundamentalReport>,
    pub range: DateRange,
}

/// Files written by [`Fixture::write_files`].
#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub bars: PathBuf,
    pub news: PathBuf,
    pub fundamentals: PathBuf,
}

/// Closed-form mid price for one stock and 0-based trading-day index.
fn mid_price(stock_idx: usize, day_idx: usize) -> f64 {
    let base = 40.0 + 15.0 * stock_idx as f64;
    let drift = if stock_idx.is_multiple_of(2) { 0.0012 } else { -0.0006 };
    let phase = day_idx as f64 / (3.0 + stock_idx as f64);
    base * (1.0 + drift * day_idx as f64 + 0.01 * (1.0 + stock_idx as f64 / 6.0) * phase.sin())
}

fn close_wiggle(stock_idx: usize, day_idx: usize) -> f64 {
    1.0 + 0.004 * ((day_idx as f64) * 0.9 + stock_idx as f64).sin()
}

/// Builds a fixture over `total_weeks` ISO weeks of Mon-Fri trading starting
/// at [`FIXTURE_START`]. `missing` punches (symbol, date) holes to exercise
/// the boundary-bar exclusion path.
pub fn fixture(
    symbols: &[&str],
    total_weeks: usize,
    missing: &[(&str, &str)],
) -> Fixture {
    let start: NaiveDate = FIXTURE_START.parse().unwrap();
    let universe: Vec<StockId> = symbols
        .iter()
        .map(|s| StockId::new(s).expect("fixture symbol"))
        .collect();
    let missing: Vec<(StockId, NaiveDate)> = missing
        .iter()
        .map(|(s, d)| (StockId::new(s).unwrap(), d.parse().unwrap()))
        .collect();

    let mut bars = Vec::new();
    let mut news = Vec::new();
    let catalysts = ["earnings call", "product launch", "analyst note", "sector update"];

    let mut day_idx = 0usize;
    for week in 0..total_weeks {
        let monday = start + Days::new(7 * week as u64);
        for offset in 0..5u64 {
            let date = monday + Days::new(offset);
            debug_assert!(!matches!(date.weekday(), Weekday::Sat | Weekday::Sun));
            for (stock_idx, stock) in universe.iter().enumerate() {
                if missing.iter().any(|(s, d)| s == stock && *d == date) {
                    continue;
                }
                let open = mid_price(stock_idx, day_idx);
                let close = open * close_wiggle(stock_idx, day_idx);
                let high = open.max(close) * 1.002;
                let low = open.min(close) * 0.998;
                bars.push(DailyBar {
                    stock: stock.clone(),
                    date,
                    open,
                    high,
                    low,
                    close,
                    volume: 1_000 + 10 * day_idx as u64,
                });
            }
            day_idx += 1;
        }
        // Two news items per stock per week: Tuesday and Saturday.
        for (stock_idx, stock) in universe.iter().enumerate() {
            for (nth, offset) in [1u64, 5].iter().enumerate() {
                let date = monday + Days::new(*offset);
                let catalyst = catalysts[(stock_idx + week + nth) % catalysts.len()];
                news.push(NewsItem {
                    stock: stock.clone(),
                    date,
                    title: format!("{stock} {catalyst}"),
                    summary: format!(
                        "Coverage of the {catalyst} for {stock} in week starting {monday}."
                    ),
                });
            }
        }
    }

    let end = start + Days::new(7 * total_weeks as u64 - 3);
    let fundamentals = quarterly_fundamentals(&universe, start, end);
    Fixture {
        universe,
        bars,
        news,
        fundamentals,
        range: DateRange::new(start, end),
    }
}

fn quarterly_fundamentals(
    universe: &[StockId],
    start: NaiveDate,
    end: NaiveDate,
) -> Vec<FundamentalReport> {
    let mut reports = Vec::new();
    // Quarters from six before the range start through the range end, each
    // released 25 days after quarter end.
    let mut quarter = FiscalQuarter {
        year: start.year() - 2,
        quarter: 1,
    };
    loop {
        let release = quarter.end_date() + Days::new(25);
        if release > end {
            break;
        }
        for (stock_idx, stock) in universe.iter().enumerate() {
            let q_idx = (quarter.year * 4 + quarter.quarter as i32) as f64;
            let revenue = 1_000.0 + 120.0 * stock_idx as f64 + 7.0 * (q_idx % 13.0);
            let net_income = revenue * (0.08 + 0.01 * ((stock_idx as f64 + q_idx) % 5.0));
            reports.push(FundamentalReport {
                stock: stock.clone(),
                fiscal_quarter: quarter,
                release_date: release,
                statements: BTreeMap::from([
                    ("revenue".to_string(), revenue),
                    ("net_income".to_string(), net_income),
                    ("eps".to_string(), net_income / 100.0),
                    ("total_assets".to_string(), revenue * 4.0),
                    ("operating_cash_flow".to_string(), net_income * 1.4),
                ]),
            });
        }
        quarter = if quarter.quarter == 4 {
            FiscalQuarter {
                year: quarter.year + 1,
                quarter: 1,
            }
        } else {
            FiscalQuarter {
                year: quarter.year,
                quarter: quarter.quarter + 1,
            }
        };
    }
    reports
}

/// Six stocks over `total_weeks` trading weeks, no holes.
pub fn six_stocks(total_weeks: usize) -> Fixture {
    fixture(&["AAA", "BBB", "CCC", "DDD", "EEE", "FFF"], total_weeks, &[])
}

/// The standard 6-stock fixture with 4 warm-up weeks plus 8 evaluated weeks.
pub fn six_by_eight() -> Fixture {
    six_stocks(12)
}

impl Fixture {
    pub fn dataset(&self) -> Dataset {
        Dataset::new(self.bars.clone(), self.news.clone(), self.fundamentals.clone())
    }

    pub fn calendar(&self) -> Result<TradingCalendar, DataError> {
        TradingCalendar::build(&self.bars, self.range)
    }

    /// Writes canonical data files into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<FixturePaths, DataError> {
        std::fs::create_dir_all(dir)?;
        let paths = FixturePaths {
            bars: dir.join("bars.csv"),
            news: dir.join("news.jsonl"),
            fundamentals: dir.join("fundamentals.jsonl"),
        };
        write_daily_bars(std::fs::File::create(&paths.bars)?, &self.bars)?;
        write_news(std::fs::File::create(&paths.news)?, &self.news)?;
        write_fundamentals(std::fs::File::create(&paths.fundamentals)?, &self.fundamentals)?;
        Ok(paths)
    }

    /// Scripted stub responses covering every agent call for every week of
    /// this fixture: three analyses and one score per (stock, week), one
    /// selection and one strategy refinement per week.
    pub fn stub_script(&self) -> StubScript {
        let calendar = self.calendar().expect("fixture calendar");
        let data = self.dataset();
        let mut responses = Vec::new();

        for week in calendar.weeks() {
            let t = week.index;
            let (tradable, _) =
                crate::backtest::tradable_universe(&self.universe, week, &data);

            for stock in &self.universe {
                let stock_idx = self.universe.iter().position(|s| s == stock).unwrap();
                for (role, body) in [
                    ("news", format!(
                        "Coverage for {stock} stayed thematic this week; sentiment reads {} with a {} horizon.",
                        ["mildly positive", "neutral", "mixed"][(stock_idx + t as usize) % 3],
                        ["short", "multi-week", "quarter-long"][(stock_idx * 2 + t as usize) % 3],
                    )),
                    ("tech", format!(
                        "{stock} trend is {}; momentum {} with volatility {}.",
                        ["upward", "sideways", "softening"][(stock_idx + t as usize) % 3],
                        ["firming", "flat", "fading"][(stock_idx + 2 * t as usize) % 3],
                        ["contained", "elevated"][(stock_idx + t as usize) % 2],
                    )),
                    ("fund", format!(
                        "{stock} fundamentals show {} revenue and {} margins across recent quarters.",
                        ["growing", "stable", "choppy"][(stock_idx + t as usize) % 3],
                        ["widening", "steady", "thinning"][(2 * stock_idx + t as usize) % 3],
                    )),
                    ("score", score_reply(stock_idx, t)),
                ] {
                    responses.push(StubEntry {
                        role: role.to_string(),
                        stock: Some(stock.as_str().to_string()),
                        week: Some(t),
                        content: StubContent::One(body),
                        transport_failures: 0,
                    });
                }
            }

            responses.push(StubEntry {
                role: "select".to_string(),
                stock: None,
                week: Some(t),
                content: StubContent::One(select_reply(&self.universe, &tradable, t)),
                transport_failures: 0,
            });
            responses.push(StubEntry {
                role: "strategy".to_string(),
                stock: None,
                week: Some(t),
                content: StubContent::One(strategy_reply(t)),
                transport_failures: 0,
            });
        }

        StubScript {
            responses,
            ..Default::default()
        }
    }

    /// Writes the scripted stub responses as a JSON fixture file.
    pub fn write_stub_script(&self, path: &Path) -> Result<(), DataError> {
        let script = self.stub_script();
        let text = serde_json::to_string_pretty(&script).expect("script serializes");
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Deterministic 1..=10 score for (stock index, week, dimension index).
pub fn scripted_dimension(stock_idx: usize, week: u32, dim: usize) -> u8 {
    (1 + (stock_idx * 3 + week as usize * 5 + dim * 7) % 10) as u8
}

fn score_reply(stock_idx: usize, week: u32) -> String {
    let d: Vec<u8> = (0..6).map(|dim| scripted_dimension(stock_idx, week, dim)).collect();
    format!(
        "Scores follow.\n```json\n{{\"financial_health\": {}, \"growth_potential\": {}, \
         \"news_sentiment\": {}, \"news_impact\": {}, \"price_momentum\": {}, \
         \"volatility_risk\": {}, \"rationale\": \"scripted assessment for week {}\"}}\n```",
        d[0], d[1], d[2], d[3], d[4], d[5], week
    )
}

/// Ranks tradable stocks by scripted score total (favoring low volatility)
/// and allocates descending weights to the top five, keeping 25% cash.
fn select_reply(universe: &[StockId], tradable: &[StockId], week: u32) -> String {
    let mut ranked: Vec<(&StockId, i64)> = tradable
        .iter()
        .map(|stock| {
            let idx = universe.iter().position(|s| s == stock).unwrap();
            let positive: i64 = (0..5)
                .map(|dim| scripted_dimension(idx, week, dim) as i64)
                .sum();
            let risk = scripted_dimension(idx, week, 5) as i64;
            (stock, positive - risk)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let weights = [0.25, 0.20, 0.15, 0.10, 0.05];
    let picks: Vec<String> = ranked
        .iter()
        .take(5)
        .zip(weights)
        .map(|((stock, _), w)| format!("\"{stock}\": {w}"))
        .collect();
    format!("```json\n{{{}}}\n```", picks.join(", "))
}

fn strategy_reply(week: u32) -> String {
    let emphasis = [
        "price momentum and financial health",
        "news sentiment backed by growth potential",
        "financial health with contained volatility risk",
    ][week as usize % 3];
    format!(
        "After week {week}: prefer stocks scoring high on {emphasis}; avoid volatility risk \
         above 7 and keep at least a quarter of capital in cash when signals disagree."
    )
}

/// Random but seeded OHLCV series for oracle tests: a bounded multiplicative
/// walk with realistic intrabar ranges.
pub fn random_bars(seed: u64, n: usize) -> Vec<DailyBar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stock = StockId::new("RND").unwrap();
    let start: NaiveDate = FIXTURE_START.parse().unwrap();
    let mut close = 100.0_f64;
    let mut bars = Vec::with_capacity(n);
    let mut date = start;
    for i in 0..n {
        while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            date = date + Days::new(1);
        }
        let open = close * (1.0 + rng.gen_range(-0.01..0.01));
        close = open * (1.0 + rng.gen_range(-0.03..0.03));
        let high = open.max(close) * (1.0 + rng.gen_range(0.0..0.01));
        let low = open.min(close) * (1.0 - rng.gen_range(0.0..0.01));
        bars.push(DailyBar {
            stock: stock.clone(),
            date,
            open,
            high,
            low,
            close,
            volume: 1_000 + i as u64,
        });
        date = date + Days::new(1);
    }
    bars
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_deterministic_and_valid() {
        let a = six_by_eight();
        let b = six_by_eight();
        assert_eq!(a.bars, b.bars);
        assert_eq!(a.news, b.news);
        assert_eq!(a.fundamentals, b.fundamentals);

        for bar in &a.bars {
            bar.validate().unwrap();
        }
        for report in &a.fundamentals {
            report.validate().unwrap();
        }
        // 12 weeks x 5 days x 6 stocks.
        assert_eq!(a.bars.len(), 12 * 5 * 6);
        let calendar = a.calendar().unwrap();
        assert_eq!(calendar.len(), 12);
    }

    #[test]
    fn fixture_files_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let fx = six_stocks(2);
        let paths = fx.write_files(tmp.path()).unwrap();
        let bars =
            crate::market_data::load_daily_bars(std::fs::File::open(&paths.bars).unwrap()).unwrap();
        assert_eq!(bars.len(), fx.bars.len());
        let news =
            crate::market_data::load_news(std::fs::File::open(&paths.news).unwrap()).unwrap();
        assert_eq!(news.len(), fx.news.len());
        let funds = crate::market_data::load_fundamentals(
            std::fs::File::open(&paths.fundamentals).unwrap(),
        )
        .unwrap();
        assert_eq!(funds.len(), fx.fundamentals.len());
    }

    #[test]
    fn stub_script_covers_all_roles_for_all_weeks() {
        let fx = six_stocks(6);
        let script = fx.stub_script();
        // Per week: 6 stocks x 4 roles + select + strategy.
        assert_eq!(script.responses.len(), 6 * (6 * 4 + 2));
        let select_weeks: Vec<u32> = script
            .responses
            .iter()
            .filter(|e| e.role == "select")
            .filter_map(|e| e.week)
            .collect();
        assert_eq!(select_weeks, (1..=6).collect::<Vec<_>>());
    }

    #[test]
    fn scripted_select_reply_parses_within_constraints() {
        let fx = six_stocks(6);
        let reply = select_reply(&fx.universe, &fx.universe, 5);
        let weights = crate::agents::parse::parse_weights(&reply).unwrap();
        assert_eq!(weights.len(), 5);
        let sum: f64 = weights.values().sum();
        assert!(sum <= 1.0 + 1e-9);
    }

    #[test]
    fn random_bars_are_valid_and_seeded() {
        let a = random_bars(7, 252);
        let b = random_bars(7, 252);
        assert_eq!(a, b);
        assert_eq!(a.len(), 252);
        for bar in &a {
            bar.validate().unwrap();
        }
        let c = random_bars(8, 252);
        assert_ne!(a, c);
    }
}
