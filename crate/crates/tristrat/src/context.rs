//! Serializes per-stock data windows into the three text inputs consumed by
//! the analysis agents, and joins the resulting analyses into one overview.
//!
//! Everything here is deterministic: fixed ordering, fixed decimal places,
//! byte-identical output for identical inputs. Every datum serialized for
//! week `t` is dated strictly before week `t`'s first trading day.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::IndicatorRow;
use crate::market_data::{
    DataError, FundamentalReport, NewsItem, StockId, TradingCalendar,
};

#[derive(Debug, Error)]
pub enum ContextError {
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Window and formatting knobs for context building.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextParams {
    /// Trading weeks of price/indicator history in the technical input.
    pub lookback_weeks: u32,
    /// Trading weeks of news history in the news input.
    pub news_lookback_weeks: u32,
    /// Maximum characters per section; oldest lines are dropped first.
    pub max_section_chars: usize,
}

impl Default for ContextParams {
    fn default() -> Self {
        ContextParams {
            lookback_weeks: 4,
            news_lookback_weeks: 1,
            max_section_chars: 12_000,
        }
    }
}

pub const NO_NEWS_SENTINEL: &str = "NO NEWS THIS WEEK";
pub const NO_FUNDAMENTALS_SENTINEL: &str = "NO FUNDAMENTALS AVAILABLE";

/// The three text inputs for one stock-week: tech covers the four preceding
/// trading weeks, news the week immediately before, fund the newest four
/// released quarters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockWeekContext {
    pub stock: StockId,
    pub week: u32,
    pub tech_text: String,
    pub news_text: String,
    pub fund_text: String,
}

impl StockWeekContext {
    /// Assembles all three inputs for one stock-week.
    pub fn build(
        stock: &StockId,
        week: u32,
        calendar: &TradingCalendar,
        indicator_rows: &[IndicatorRow],
        news: &[NewsItem],
        fundamentals: &[FundamentalReport],
        params: &ContextParams,
    ) -> Result<Self, ContextError> {
        Ok(StockWeekContext {
            stock: stock.clone(),
            week,
            tech_text: build_tech_input(week, calendar, indicator_rows, params)?,
            news_text: build_news_input(stock, week, calendar, news, params)?,
            fund_text: build_fund_input(stock, week, calendar, fundamentals, params)?,
        })
    }
}

/// Concatenation of the three analysis reports for one stock-week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataOverview {
    pub stock: StockId,
    pub week: u32,
    pub text: String,
}

/// Drops whole lines from the front until the text fits `cap` characters.
fn cap_section(text: String, cap: usize) -> String {
    if text.chars().count() <= cap {
        return text;
    }
    let mut lines: Vec<&str> = text.lines().collect();
    while lines.len() > 1 {
        lines.remove(0);
        let candidate = lines.join("\n");
        if candidate.chars().count() <= cap {
            return candidate;
        }
    }
    lines.join("\n").chars().take(cap).collect()
}

fn fmt_opt(value: Option<f64>, name: &str) -> Option<String> {
    value.map(|v| format!("{name}={v:.4}"))
}

/// One line of technical context per trading day of the lookback window:
/// the date, the close (2 decimals), and every defined indicator (4 decimals).
/// `indicator_rows` is the stock's own indicator table.
pub fn build_tech_input(
    week: u32,
    calendar: &TradingCalendar,
    indicator_rows: &[IndicatorRow],
    params: &ContextParams,
) -> Result<String, ContextError> {
    let window = calendar.week_slice(week, params.lookback_weeks)?;
    let mut lines = Vec::new();
    for trading_week in window {
        for &day in &trading_week.trading_days {
            if let Some(row) = indicator_rows.iter().find(|r| r.date == day) {
                lines.push(format_tech_line(day, row));
            }
        }
    }
    Ok(cap_section(lines.join("\n"), params.max_section_chars))
}

fn format_tech_line(day: NaiveDate, row: &IndicatorRow) -> String {
    let mut fields = vec![format!("{day} close={:.2}", row.close)];
    fields.extend(fmt_opt(row.sma, "sma"));
    fields.extend(fmt_opt(row.atr, "atr"));
    fields.extend(fmt_opt(row.rsi, "rsi"));
    fields.extend(fmt_opt(row.macd_line, "macd_line"));
    fields.extend(fmt_opt(row.macd_signal, "macd_signal"));
    fields.extend(fmt_opt(row.macd_hist, "macd_hist"));
    fields.extend(fmt_opt(row.boll_upper, "boll_upper"));
    fields.extend(fmt_opt(row.boll_mid, "boll_mid"));
    fields.extend(fmt_opt(row.boll_lower, "boll_lower"));
    fields.join(" ")
}

/// News lines for the week(s) immediately preceding week `t`, date-sorted.
/// The window is the Mon-Sun calendar span of those trading weeks, so weekend
/// items count. Zero items produce the sentinel line.
pub fn build_news_input(
    stock: &StockId,
    week: u32,
    calendar: &TradingCalendar,
    news: &[NewsItem],
    params: &ContextParams,
) -> Result<String, ContextError> {
    let window = calendar.week_slice(week, params.news_lookback_weeks)?;
    let from = window[0].monday();
    let to = window[window.len() - 1].sunday();

    let mut items: Vec<&NewsItem> = news
        .iter()
        .filter(|n| &n.stock == stock && from <= n.date && n.date <= to)
        .collect();
    items.sort_by(|a, b| (a.date, &a.title).cmp(&(b.date, &b.title)));

    if items.is_empty() {
        return Ok(NO_NEWS_SENTINEL.to_string());
    }
    let lines: Vec<String> = items
        .iter()
        .map(|n| format!("[{}] {} — {}", n.date, n.title, n.summary))
        .collect();
    Ok(cap_section(lines.join("\n"), params.max_section_chars))
}

/// Up to four most recent fiscal quarters released strictly before week `t`'s
/// first trading day, rendered oldest to newest.
pub fn build_fund_input(
    stock: &StockId,
    week: u32,
    calendar: &TradingCalendar,
    fundamentals: &[FundamentalReport],
    params: &ContextParams,
) -> Result<String, ContextError> {
    let cutoff = calendar.week(week)?.first_day();
    let mut released: Vec<&FundamentalReport> = fundamentals
        .iter()
        .filter(|r| &r.stock == stock && r.release_date < cutoff)
        .collect();
    released.sort_by_key(|r| r.fiscal_quarter);
    let keep = released.len().saturating_sub(4);
    let recent = &released[keep..];

    if recent.is_empty() {
        return Ok(NO_FUNDAMENTALS_SENTINEL.to_string());
    }
    let blocks: Vec<String> = recent.iter().map(|r| format_fund_block(r)).collect();
    Ok(cap_section(blocks.join("\n"), params.max_section_chars))
}

fn format_fund_block(report: &FundamentalReport) -> String {
    let mut lines = vec![format!(
        "[{}] released {}",
        report.fiscal_quarter, report.release_date
    )];
    for (field, value) in &report.statements {
        lines.push(format!("  {field}: {value}"));
    }
    lines.join("\n")
}

/// Joins the three analysis reports with fixed section headers, in the order
/// news, technical, fundamental.
pub fn build_overview(
    stock: &StockId,
    week: u32,
    alpha_news: &str,
    alpha_tech: &str,
    alpha_fund: &str,
) -> DataOverview {
    let section = |header: &str, body: &str| {
        let body = if body.trim().is_empty() { "(empty)" } else { body };
        format!("## {header}\n{body}")
    };
    let text = [
        section("NEWS ANALYSIS", alpha_news),
        section("TECHNICAL ANALYSIS", alpha_tech),
        section("FUNDAMENTAL ANALYSIS", alpha_fund),
    ]
    .join("\n\n");
    DataOverview {
        stock: stock.clone(),
        week,
        text,
    }
}
