//! The append-only run ledger: one header line plus one line per settled
//! week, serialized as JSONL.
//!
//! The ledger is the source of truth for resume and replay. It contains no
//! wall-clock timestamps, absolute paths, or transport details, so two runs
//! over identical inputs produce byte-identical files.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const LEDGER_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("ledger {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("ledger {path} does not match this run: {message}")]
    Mismatch { path: PathBuf, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identifies the run a ledger belongs to. Semantic fields only; paths and
/// timestamps would break byte-identical replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerHeader {
    pub schema_version: u32,
    pub mode: String,
    pub model: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub universe: Vec<String>,
    pub history_capacity: usize,
    pub max_positions: usize,
    pub lookback_weeks: u32,
    pub transaction_cost_bps: f64,
    pub initial_strategy: String,
}

/// One agent exchange as persisted: role, routing, cache key, the fully
/// rendered prompt, and the response content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerCall {
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stock: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub week: Option<u32>,
    pub cache_key: String,
    pub prompt: String,
    pub response: String,
}

impl From<&crate::agents::CallRecord> for LedgerCall {
    fn from(record: &crate::agents::CallRecord) -> Self {
        LedgerCall {
            role: record.role.clone(),
            stock: record.stock.clone(),
            week: record.week,
            cache_key: record.cache_key.clone(),
            prompt: record.prompt.clone(),
            response: record.response.clone(),
        }
    }
}

/// Everything about one settled week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekRecord {
    pub week: u32,
    /// 1-based position within the evaluated range.
    pub eval_index: usize,
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
    /// Strategy in force for this week (empty for baselines).
    pub strategy: String,
    pub tradable: Vec<String>,
    pub excluded: Vec<String>,
    pub portfolio: BTreeMap<String, f64>,
    pub stock_returns: BTreeMap<String, f64>,
    pub portfolio_return: f64,
    pub universe_avg_return: f64,
    pub cash_fraction: f64,
    /// Wealth level after this week.
    pub wealth: f64,
    /// Strategy for the next week (empty for baselines).
    pub next_strategy: String,
    pub flags: Vec<String>,
    pub calls: Vec<LedgerCall>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum LedgerLine {
    Header(LedgerHeader),
    Week(Box<WeekRecord>),
}

/// Serialized appender. Every append flushes, so a crash loses at most the
/// week in progress.
pub struct LedgerWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl LedgerWriter {
    /// Starts a fresh ledger, truncating any existing file.
    pub fn create(path: &Path, header: &LedgerHeader) -> Result<Self, LedgerError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = File::create(path)?;
        let mut writer = LedgerWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        writer.write_line(&LedgerLine::Header(header.clone()))?;
        Ok(writer)
    }

    /// Reopens an existing ledger for appending after its content has been
    /// validated by [`read_ledger`].
    pub fn append_to(path: &Path) -> Result<Self, LedgerError> {
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(LedgerWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append_week(&mut self, record: &WeekRecord) -> Result<(), LedgerError> {
        self.write_line(&LedgerLine::Week(Box::new(record.clone())))
    }

    fn write_line(&mut self, line: &LedgerLine) -> Result<(), LedgerError> {
        let json = serde_json::to_string(line).expect("ledger line serializes");
        writeln!(self.out, "{json}")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Reads and structurally validates a ledger file.
pub fn read_ledger(path: &Path) -> Result<(LedgerHeader, Vec<WeekRecord>), LedgerError> {
    let malformed = |message: String| LedgerError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path)?;
    let mut header: Option<LedgerHeader> = None;
    let mut weeks: Vec<WeekRecord> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LedgerLine = serde_json::from_str(&line)
            .map_err(|e| malformed(format!("line {}: {e}", i + 1)))?;
        match parsed {
            LedgerLine::Header(h) => {
                if header.is_some() {
                    return Err(malformed(format!("line {}: duplicate header", i + 1)));
                }
                if h.schema_version != LEDGER_SCHEMA_VERSION {
                    return Err(malformed(format!(
                        "schema_version {} unsupported (expected {LEDGER_SCHEMA_VERSION})",
                        h.schema_version
                    )));
                }
                header = Some(h);
            }
            LedgerLine::Week(week) => {
                if header.is_none() {
                    return Err(malformed(format!("line {}: week before header", i + 1)));
                }
                if let Some(last) = weeks.last() {
                    if week.week <= last.week {
                        return Err(malformed(format!(
                            "week {} does not follow week {}",
                            week.week, last.week
                        )));
                    }
                }
                weeks.push(*week);
            }
        }
    }
    let header = header.ok_or_else(|| malformed("missing header line".to_string()))?;
    Ok((header, weeks))
}
