//! Market data types, file ingestion, and the trading calendar.
//!
//! All inputs are daily: OHLCV bars (CSV), news items (JSONL), and quarterly
//! fundamental reports (JSONL). Everything is immutable after construction and
//! safe for concurrent reads.

mod calendar;
mod load;

pub use calendar::{TradingCalendar, TradingWeek};
pub use load::{
    load_daily_bars, load_fundamentals, load_news, write_daily_bars, write_fundamentals,
    write_news,
};

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while loading or validating market data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bar {symbol} {date}: {message}")]
    InvalidBar {
        symbol: String,
        date: NaiveDate,
        message: String,
    },
    #[error("duplicate {kind} for {symbol} at {key}")]
    Duplicate {
        kind: &'static str,
        symbol: String,
        key: String,
    },
    #[error("invalid symbol {0:?}: expected 1-6 uppercase ASCII characters")]
    InvalidSymbol(String),
    #[error("invalid fiscal quarter {0:?}: expected e.g. 2023Q4")]
    InvalidQuarter(String),
    #[error("fundamental {symbol} {quarter}: release date {release} is not after quarter end {quarter_end}")]
    ReleaseBeforeQuarterEnd {
        symbol: String,
        quarter: String,
        release: NaiveDate,
        quarter_end: NaiveDate,
    },
    #[error("no trading days found in range {start}..={end}")]
    EmptyCalendar { start: NaiveDate, end: NaiveDate },
    #[error("week {week} requires {lookback} prior trading weeks; first usable week is {first_valid}")]
    WarmUp {
        week: u32,
        lookback: u32,
        first_valid: u32,
    },
    #[error("no trading week with index {0}")]
    UnknownWeek(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exchange ticker, uppercase, 1-6 ASCII characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StockId(String);

impl StockId {
    pub fn new(symbol: &str) -> Result<Self, DataError> {
        let ok = !symbol.is_empty()
            && symbol.len() <= 6
            && symbol.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit());
        if ok {
            Ok(StockId(symbol.to_string()))
        } else {
            Err(DataError::InvalidSymbol(symbol.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One trading day of OHLCV for one stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyBar {
    pub stock: StockId,
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: u64,
}

impl DailyBar {
    /// Checks price positivity and OHLC ordering (low <= open, close <= high).
    pub fn validate(&self) -> Result<(), DataError> {
        let fail = |message: &str| {
            Err(DataError::InvalidBar {
                symbol: self.stock.as_str().to_string(),
                date: self.date,
                message: message.to_string(),
            })
        };
        for (name, v) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return fail(&format!("{name} must be a positive finite price, got {v}"));
            }
        }
        if self.low > self.high {
            return fail(&format!("low {} exceeds high {}", self.low, self.high));
        }
        if self.open < self.low || self.open > self.high {
            return fail(&format!("open {} outside [low, high]", self.open));
        }
        if self.close < self.low || self.close > self.high {
            return fail(&format!("close {} outside [low, high]", self.close));
        }
        Ok(())
    }
}

/// One news item attributed to a stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsItem {
    #[serde(rename = "symbol")]
    pub stock: StockId,
    pub date: NaiveDate,
    pub title: String,
    pub summary: String,
}

/// Fiscal quarter label such as 2023Q4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiscalQuarter {
    pub year: i32,
    pub quarter: u8,
}

impl FiscalQuarter {
    pub fn parse(label: &str) -> Result<Self, DataError> {
        let bad = || DataError::InvalidQuarter(label.to_string());
        let (year, quarter) = label.split_once('Q').ok_or_else(bad)?;
        let year: i32 = year.parse().map_err(|_| bad())?;
        let quarter: u8 = quarter.parse().map_err(|_| bad())?;
        if !(1..=4).contains(&quarter) || !(1900..=2999).contains(&year) {
            return Err(bad());
        }
        Ok(FiscalQuarter { year, quarter })
    }

    /// Last calendar day of the quarter.
    pub fn end_date(&self) -> NaiveDate {
        let (m, d) = match self.quarter {
            1 => (3, 31),
            2 => (6, 30),
            3 => (9, 30),
            _ => (12, 31),
        };
        NaiveDate::from_ymd_opt(self.year, m, d).expect("valid quarter end")
    }
}

impl fmt::Display for FiscalQuarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl Serialize for FiscalQuarter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FiscalQuarter {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let label = String::deserialize(d)?;
        FiscalQuarter::parse(&label).map_err(serde::de::Error::custom)
    }
}

/// Quarterly statement snapshot for one stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundamentalReport {
    #[serde(rename = "symbol")]
    pub stock: StockId,
    pub fiscal_quarter: FiscalQuarter,
    pub release_date: NaiveDate,
    /// Flat field -> value map (earnings, balance-sheet, cash-flow line items).
    pub statements: BTreeMap<String, f64>,
}

impl FundamentalReport {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.release_date <= self.fiscal_quarter.end_date() {
            return Err(DataError::ReleaseBeforeQuarterEnd {
                symbol: self.stock.as_str().to_string(),
                quarter: self.fiscal_quarter.to_string(),
                release: self.release_date,
                quarter_end: self.fiscal_quarter.end_date(),
            });
        }
        Ok(())
    }
}

/// Inclusive date interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateRange { start, end }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

/// Indexed, validated view over all loaded inputs.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    bars: BTreeMap<StockId, BTreeMap<NaiveDate, DailyBar>>,
    news: BTreeMap<StockId, Vec<NewsItem>>,
    fundamentals: BTreeMap<StockId, Vec<FundamentalReport>>,
}

impl Dataset {
    pub fn new(
        bars: Vec<DailyBar>,
        news: Vec<NewsItem>,
        fundamentals: Vec<FundamentalReport>,
    ) -> Self {
        let mut ds = Dataset::default();
        for bar in bars {
            ds.bars.entry(bar.stock.clone()).or_default().insert(bar.date, bar);
        }
        for item in news {
            ds.news.entry(item.stock.clone()).or_default().push(item);
        }
        for report in fundamentals {
            ds.fundamentals.entry(report.stock.clone()).or_default().push(report);
        }
        for items in ds.news.values_mut() {
            items.sort_by_key(|n| n.date);
        }
        for reports in ds.fundamentals.values_mut() {
            reports.sort_by_key(|r| r.fiscal_quarter);
        }
        ds
    }

    pub fn stocks(&self) -> impl Iterator<Item = &StockId> {
        self.bars.keys()
    }

    pub fn bar(&self, stock: &StockId, date: NaiveDate) -> Option<&DailyBar> {
        self.bars.get(stock).and_then(|m| m.get(&date))
    }

    /// Bars for one stock in date order.
    pub fn bars_for(&self, stock: &StockId) -> Vec<&DailyBar> {
        self.bars
            .get(stock)
            .map(|m| m.values().collect())
            .unwrap_or_default()
    }

    pub fn news_for(&self, stock: &StockId) -> &[NewsItem] {
        self.news.get(stock).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn fundamentals_for(&self, stock: &StockId) -> &[FundamentalReport] {
        self.fundamentals.get(stock).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Union of all bar dates across stocks, ascending.
    pub fn bar_dates(&self) -> Vec<NaiveDate> {
        let mut dates: Vec<NaiveDate> = self
            .bars
            .values()
            .flat_map(|m| m.keys().copied())
            .collect();
        dates.sort_unstable();
        dates.dedup();
        dates
    }
}
