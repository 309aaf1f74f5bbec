//! Rolling trajectory of past strategies and their outcomes, fed back into
//! strategy refinement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HistoryError {
    #[error("record for week {week} does not follow week {last}")]
    NonMonotoneWeek { week: u32, last: u32 },
}

/// One completed week: the strategy that was in force and what it earned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRecord {
    pub week: u32,
    pub strategy_text: String,
    /// Arithmetic mean weekly return across the tradable universe, a fraction.
    pub universe_avg_return: f64,
    /// Realized portfolio return for the week, a fraction.
    pub portfolio_return: f64,
}

/// FIFO ring of the last `capacity` strategy records, weeks strictly
/// ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyHistory {
    capacity: usize,
    records: Vec<StrategyRecord>,
}

pub const NO_HISTORY_SENTINEL: &str = "NO PRIOR STRATEGIES";

impl StrategyHistory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "history capacity must be at least 1");
        StrategyHistory {
            capacity,
            records: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[StrategyRecord] {
        &self.records
    }

    /// Appends a record, evicting the oldest when full. Weeks must be
    /// strictly ascending.
    pub fn append(&mut self, record: StrategyRecord) -> Result<(), HistoryError> {
        if let Some(last) = self.records.last() {
            if record.week <= last.week {
                return Err(HistoryError::NonMonotoneWeek {
                    week: record.week,
                    last: last.week,
                });
            }
        }
        self.records.push(record);
        if self.records.len() > self.capacity {
            self.records.remove(0);
        }
        Ok(())
    }

    /// Renders one block per record, oldest first, with returns as signed
    /// percentages to two decimals.
    pub fn render(&self) -> String {
        if self.records.is_empty() {
            return NO_HISTORY_SENTINEL.to_string();
        }
        self.records
            .iter()
            .map(|r| {
                format!(
                    "week {} strategy: {}\n  universe average return: {}\n  portfolio return: {}",
                    r.week,
                    r.strategy_text,
                    signed_pct(r.universe_avg_return),
                    signed_pct(r.portfolio_return),
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Formats a fractional return as a signed percentage with two decimals.
pub fn signed_pct(fraction: f64) -> String {
    format!("{:+.2}%", fraction * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(week: u32) -> StrategyRecord {
        StrategyRecord {
            week,
            strategy_text: format!("strategy {week}"),
            universe_avg_return: 0.01,
            portfolio_return: 0.02,
        }
    }

    #[test]
    fn append_grows_then_evicts_fifo() {
        let mut h = StrategyHistory::new(10);
        h.append(record(1)).unwrap();
        assert_eq!(h.len(), 1);
        for week in 2..=10 {
            h.append(record(week)).unwrap();
        }
        assert_eq!(h.len(), 10);
        h.append(record(11)).unwrap();
        assert_eq!(h.len(), 10);
        assert_eq!(h.records()[0].week, 2);
        assert_eq!(h.records()[9].week, 11);
    }

    #[test]
    fn append_rejects_non_monotone_week() {
        let mut h = StrategyHistory::new(10);
        h.append(record(7)).unwrap();
        assert_eq!(
            h.append(record(5)),
            Err(HistoryError::NonMonotoneWeek { week: 5, last: 7 })
        );
    }

    #[test]
    fn size_is_min_of_appends_and_capacity() {
        for n in [0usize, 3, 10, 17] {
            let mut h = StrategyHistory::new(10);
            for week in 1..=n as u32 {
                h.append(record(week)).unwrap();
            }
            assert_eq!(h.len(), n.min(10));
            let first_kept = (n as u32).saturating_sub(10) + 1;
            for (i, r) in h.records().iter().enumerate() {
                assert_eq!(r.week, first_kept + i as u32);
            }
        }
    }

    #[test]
    fn render_formats_signed_percentages() {
        let mut h = StrategyHistory::new(10);
        assert_eq!(h.render(), NO_HISTORY_SENTINEL);

        h.append(StrategyRecord {
            week: 1,
            strategy_text: "x".to_string(),
            universe_avg_return: 0.01,
            portfolio_return: 0.02,
        })
        .unwrap();
        let text = h.render();
        assert!(text.contains("+1.00%"));
        assert!(text.contains("+2.00%"));

        for week in 2..=10 {
            h.append(record(week)).unwrap();
        }
        let blocks = h.render();
        assert_eq!(blocks.matches("universe average return:").count(), 10);
        let first = blocks.find("week 1 strategy").unwrap();
        let last = blocks.find("week 10 strategy").unwrap();
        assert!(first < last);
    }

    #[test]
    fn negative_returns_render_with_minus_sign() {
        assert_eq!(signed_pct(-0.0123), "-1.23%");
        assert_eq!(signed_pct(0.0), "+0.00%");
    }
}
