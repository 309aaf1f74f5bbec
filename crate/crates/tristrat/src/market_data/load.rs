//! File loaders and canonical serializers.
//!
//! Canonical formats:
//! - bars: CSV with header `symbol,date,open,high,low,close,volume`
//! - news: JSONL with fields `symbol,date,title,summary`
//! - fundamentals: JSONL with fields `symbol,fiscal_quarter,release_date,statements`
//!
//! Loaders reject malformed rows with their line number and reject duplicate
//! keys. Serializers emit rows sorted by (symbol, date), so serialize(load(x))
//! is byte-identical for inputs already in canonical form.

use std::io::{BufRead, BufReader, Read, Write};

use chrono::NaiveDate;

use super::{DailyBar, DataError, FundamentalReport, NewsItem, StockId};

const BAR_HEADER: [&str; 7] = ["symbol", "date", "open", "high", "low", "close", "volume"];

fn parse_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_date(line: usize, field: &str, raw: &str) -> Result<NaiveDate, DataError> {
    NaiveDate::parse_from_str(raw, "%Y-%m-%d")
        .map_err(|_| parse_err(line, format!("{field} {raw:?} is not a YYYY-MM-DD date")))
}

fn parse_price(line: usize, field: &str, raw: &str) -> Result<f64, DataError> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("{field} {raw:?} is not a number")))
}

/// Loads and validates daily bars from canonical CSV.
///
/// Bars come back sorted by (stock, date); duplicate (stock, date) pairs and
/// OHLC inversions are rejected.
pub fn load_daily_bars<R: Read>(source: R) -> Result<Vec<DailyBar>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != BAR_HEADER {
        return Err(parse_err(
            1,
            format!("expected header {}, got {:?}", BAR_HEADER.join(","), headers),
        ));
    }

    let mut bars = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        if record.len() != BAR_HEADER.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, got {}", BAR_HEADER.len(), record.len()),
            ));
        }
        let stock = StockId::new(&record[0])
            .map_err(|e| parse_err(line, e.to_string()))?;
        let bar = DailyBar {
            stock,
            date: parse_date(line, "date", &record[1])?,
            open: parse_price(line, "open", &record[2])?,
            high: parse_price(line, "high", &record[3])?,
            low: parse_price(line, "low", &record[4])?,
            close: parse_price(line, "close", &record[5])?,
            volume: record[6]
                .parse::<u64>()
                .map_err(|_| parse_err(line, format!("volume {:?} is not a non-negative integer", &record[6])))?,
        };
        bar.validate()?;
        bars.push(bar);
    }

    bars.sort_by(|a, b| (&a.stock, a.date).cmp(&(&b.stock, b.date)));
    for pair in bars.windows(2) {
        if pair[0].stock == pair[1].stock && pair[0].date == pair[1].date {
            return Err(DataError::Duplicate {
                kind: "bar",
                symbol: pair[0].stock.as_str().to_string(),
                key: pair[0].date.to_string(),
            });
        }
    }
    Ok(bars)
}

/// Loads news items from JSONL, sorted by (stock, date).
pub fn load_news<R: Read>(source: R) -> Result<Vec<NewsItem>, DataError> {
    let mut items: Vec<NewsItem> = read_jsonl(source)?;
    for (line, item) in items.iter().enumerate() {
        if item.title.trim().is_empty() {
            return Err(parse_err(line + 1, "news title must be nonempty"));
        }
    }
    items.sort_by(|a, b| (&a.stock, a.date, &a.title).cmp(&(&b.stock, b.date, &b.title)));
    Ok(items)
}

/// Loads quarterly fundamentals from JSONL, sorted by (stock, fiscal quarter).
///
/// Duplicate (stock, quarter) pairs are rejected, as are reports released on
/// or before their quarter end.
pub fn load_fundamentals<R: Read>(source: R) -> Result<Vec<FundamentalReport>, DataError> {
    let reports: Vec<FundamentalReport> = read_jsonl(source)?;
    for report in &reports {
        report.validate()?;
    }
    let mut reports = reports;
    reports.sort_by(|a, b| (&a.stock, a.fiscal_quarter).cmp(&(&b.stock, b.fiscal_quarter)));
    for pair in reports.windows(2) {
        if pair[0].stock == pair[1].stock && pair[0].fiscal_quarter == pair[1].fiscal_quarter {
            return Err(DataError::Duplicate {
                kind: "fundamental report",
                symbol: pair[0].stock.as_str().to_string(),
                key: pair[0].fiscal_quarter.to_string(),
            });
        }
    }
    Ok(reports)
}

fn read_jsonl<R: Read, T: serde::de::DeserializeOwned>(source: R) -> Result<Vec<T>, DataError> {
    let reader = BufReader::new(source);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| parse_err(line_no, e.to_string()))?;
        out.push(value);
    }
    Ok(out)
}

/// Canonical price formatting: shortest round-trip decimal.
fn fmt_price(v: f64) -> String {
    format!("{v}")
}

/// Writes bars in canonical CSV form (sorted by symbol, date).
pub fn write_daily_bars<W: Write>(mut out: W, bars: &[DailyBar]) -> Result<(), DataError> {
    let mut sorted: Vec<&DailyBar> = bars.iter().collect();
    sorted.sort_by(|a, b| (&a.stock, a.date).cmp(&(&b.stock, b.date)));
    writeln!(out, "{}", BAR_HEADER.join(","))?;
    for bar in sorted {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            bar.stock,
            bar.date,
            fmt_price(bar.open),
            fmt_price(bar.high),
            fmt_price(bar.low),
            fmt_price(bar.close),
            bar.volume
        )?;
    }
    Ok(())
}

/// Writes news items in canonical JSONL form (sorted by symbol, date, title).
pub fn write_news<W: Write>(mut out: W, items: &[NewsItem]) -> Result<(), DataError> {
    let mut sorted: Vec<&NewsItem> = items.iter().collect();
    sorted.sort_by(|a, b| (&a.stock, a.date, &a.title).cmp(&(&b.stock, b.date, &b.title)));
    for item in sorted {
        let line = serde_json::to_string(item).expect("news serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes fundamentals in canonical JSONL form (sorted by symbol, quarter).
pub fn write_fundamentals<W: Write>(
    mut out: W,
    reports: &[FundamentalReport],
) -> Result<(), DataError> {
    let mut sorted: Vec<&FundamentalReport> = reports.iter().collect();
    sorted.sort_by(|a, b| (&a.stock, a.fiscal_quarter).cmp(&(&b.stock, b.fiscal_quarter)));
    for report in sorted {
        let line = serde_json::to_string(report).expect("fundamental serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}
