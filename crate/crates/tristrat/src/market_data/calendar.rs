//! Trading week partition of the bar history.
//!
//! A week is an ISO-8601 Mon-Sun window; any day with at least one bar across
//! the universe is a trading day. ISO weeks without trading days are skipped
//! and do not consume an index, so week indices are contiguous from 1.

use chrono::{Datelike, Days, NaiveDate, Weekday};

use super::{DailyBar, DataError, DateRange};

/// One trading week: its 1-based index and its trading days in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingWeek {
    pub index: u32,
    pub trading_days: Vec<NaiveDate>,
}

impl TradingWeek {
    pub fn first_day(&self) -> NaiveDate {
        self.trading_days[0]
    }

    pub fn last_day(&self) -> NaiveDate {
        *self.trading_days.last().expect("trading week is nonempty")
    }

    /// Monday of the ISO week containing this trading week.
    pub fn monday(&self) -> NaiveDate {
        let day = self.first_day();
        day - Days::new(day.weekday().num_days_from_monday() as u64)
    }

    /// Sunday of the ISO week containing this trading week.
    pub fn sunday(&self) -> NaiveDate {
        self.monday() + Days::new(6)
    }

    /// True when `date` falls inside the Mon-Sun span of this week.
    pub fn contains_calendar_date(&self, date: NaiveDate) -> bool {
        self.monday() <= date && date <= self.sunday()
    }
}

/// Ordered list of trading weeks covering the data range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    weeks: Vec<TradingWeek>,
}

impl TradingCalendar {
    /// Partitions all bar dates within `range` into ISO-week groups.
    pub fn build(bars: &[DailyBar], range: DateRange) -> Result<Self, DataError> {
        let mut dates: Vec<NaiveDate> = bars
            .iter()
            .map(|b| b.date)
            .filter(|d| range.contains(*d))
            .collect();
        dates.sort_unstable();
        dates.dedup();
        if dates.is_empty() {
            return Err(DataError::EmptyCalendar {
                start: range.start,
                end: range.end,
            });
        }

        let mut weeks: Vec<TradingWeek> = Vec::new();
        for date in dates {
            let key = date.iso_week();
            let same_week = weeks.last().is_some_and(|w| {
                let last = w.last_day().iso_week();
                last.year() == key.year() && last.week() == key.week()
            });
            if same_week {
                weeks.last_mut().unwrap().trading_days.push(date);
            } else {
                weeks.push(TradingWeek {
                    index: weeks.len() as u32 + 1,
                    trading_days: vec![date],
                });
            }
        }
        Ok(TradingCalendar { weeks })
    }

    pub fn weeks(&self) -> &[TradingWeek] {
        &self.weeks
    }

    pub fn len(&self) -> usize {
        self.weeks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weeks.is_empty()
    }

    pub fn week(&self, t: u32) -> Result<&TradingWeek, DataError> {
        if t == 0 || t as usize > self.weeks.len() {
            return Err(DataError::UnknownWeek(t));
        }
        Ok(&self.weeks[t as usize - 1])
    }

    /// Weeks `t-lookback .. t-1` in order, for building week-`t` inputs.
    pub fn week_slice(&self, t: u32, lookback: u32) -> Result<&[TradingWeek], DataError> {
        assert!(lookback >= 1, "lookback must be at least 1");
        if t <= lookback {
            return Err(DataError::WarmUp {
                week: t,
                lookback,
                first_valid: lookback + 1,
            });
        }
        self.week(t)?;
        let start = (t - lookback) as usize - 1;
        Ok(&self.weeks[start..t as usize - 1])
    }
}

#[allow(dead_code)]
fn is_weekend(date: NaiveDate) -> bool {
    matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::StockId;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn bar(sym: &str, date: &str) -> DailyBar {
        DailyBar {
            stock: StockId::new(sym).unwrap(),
            date: d(date),
            open: 10.0,
            high: 11.0,
            low: 9.0,
            close: 10.5,
            volume: 100,
        }
    }

    fn range(start: &str, end: &str) -> DateRange {
        DateRange::new(d(start), d(end))
    }

    #[test]
    fn one_full_iso_week() {
        // 2022-05-16 is a Monday.
        let bars: Vec<DailyBar> = ["2022-05-16", "2022-05-17", "2022-05-18", "2022-05-19", "2022-05-20"]
            .iter()
            .map(|date| bar("AAPL", date))
            .collect();
        let cal = TradingCalendar::build(&bars, range("2022-05-16", "2022-05-22")).unwrap();
        assert_eq!(cal.len(), 1);
        let week = cal.week(1).unwrap();
        assert_eq!(week.first_day(), d("2022-05-16"));
        assert_eq!(week.last_day(), d("2022-05-20"));
        assert_eq!(week.monday(), d("2022-05-16"));
        assert_eq!(week.sunday(), d("2022-05-22"));
    }

    #[test]
    fn monday_holiday_shifts_first_day() {
        let bars = vec![bar("AAPL", "2022-05-17"), bar("AAPL", "2022-05-18")];
        let cal = TradingCalendar::build(&bars, range("2022-05-16", "2022-05-22")).unwrap();
        assert_eq!(cal.week(1).unwrap().first_day(), d("2022-05-17"));
    }

    #[test]
    fn empty_middle_week_does_not_consume_index() {
        // Weeks of May 16, May 23 (empty), May 30: hand enumeration gives two
        // trading weeks with indices 1 and 2.
        let bars = vec![bar("AAPL", "2022-05-16"), bar("AAPL", "2022-05-30")];
        let cal = TradingCalendar::build(&bars, range("2022-05-16", "2022-06-05")).unwrap();
        assert_eq!(cal.len(), 2);
        assert_eq!(cal.week(1).unwrap().first_day(), d("2022-05-16"));
        assert_eq!(cal.week(2).unwrap().index, 2);
        assert_eq!(cal.week(2).unwrap().first_day(), d("2022-05-30"));
    }

    #[test]
    fn empty_bar_set_is_an_error() {
        assert!(matches!(
            TradingCalendar::build(&[], range("2022-05-16", "2022-05-22")),
            Err(DataError::EmptyCalendar { .. })
        ));
    }

    #[test]
    fn week_slice_returns_lookback_window() {
        let mondays = [
            "2022-05-16", "2022-05-23", "2022-05-30", "2022-06-06", "2022-06-13",
            "2022-06-20", "2022-06-27", "2022-07-04", "2022-07-11", "2022-07-18",
            "2022-07-25", "2022-08-01",
        ];
        let bars: Vec<DailyBar> = mondays.iter().map(|date| bar("AAPL", date)).collect();
        let cal = TradingCalendar::build(&bars, range("2022-05-16", "2022-08-07")).unwrap();

        let slice = cal.week_slice(5, 4).unwrap();
        let indices: Vec<u32> = slice.iter().map(|w| w.index).collect();
        assert_eq!(indices, vec![1, 2, 3, 4]);

        assert!(matches!(
            cal.week_slice(2, 4),
            Err(DataError::WarmUp { first_valid: 5, .. })
        ));

        let slice = cal.week_slice(12, 1).unwrap();
        assert_eq!(slice.len(), 1);
        assert_eq!(slice[0].index, 11);
    }

    #[test]
    fn partition_every_bar_date_in_exactly_one_week() {
        let mut bars = Vec::new();
        let mut date = d("2022-05-16");
        while date <= d("2022-07-31") {
            if !is_weekend(date) && date.day() % 7 != 3 {
                bars.push(bar("AAPL", &date.to_string()));
            }
            date = date + Days::new(1);
        }
        let rng = range("2022-05-16", "2022-07-31");
        let cal = TradingCalendar::build(&bars, rng).unwrap();

        for b in &bars {
            let owners = cal
                .weeks()
                .iter()
                .filter(|w| w.trading_days.contains(&b.date))
                .count();
            assert_eq!(owners, 1, "{} must be in exactly one week", b.date);
        }
        // Monotone: first_day(t) > last_day(t-1).
        for pair in cal.weeks().windows(2) {
            assert!(pair[1].first_day() > pair[0].last_day());
        }
        // Indices contiguous from 1.
        for (i, w) in cal.weeks().iter().enumerate() {
            assert_eq!(w.index as usize, i + 1);
        }
    }
}
