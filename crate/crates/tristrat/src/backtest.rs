//! Weekly trade settlement: buy at the open of the week's first trading day,
//! liquidate at the close of its last trading day.
//!
//! Settlement for week `t` reads only bars within week `t`. Fractional shares
//! are assumed, so weights map directly to capital fractions, and costs
//! default to zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{Dataset, StockId, TradingWeek};
use crate::portfolio::Portfolio;

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("{stock} has no bar on {day} ({boundary} trading day of week {week})")]
    MissingBoundaryBar {
        stock: StockId,
        week: u32,
        day: chrono::NaiveDate,
        boundary: &'static str,
    },
    #[error("portfolio holds {stock} but week {week} has no return for it")]
    MissingReturn { stock: StockId, week: u32 },
}

/// Buy and sell prices for one stock in one week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionPrices {
    pub stock: StockId,
    pub week: u32,
    pub buy: f64,
    pub sell: f64,
}

/// Per-stock weekly returns for one week's tradable universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnVector {
    pub week: u32,
    pub returns: BTreeMap<StockId, f64>,
}

impl ReturnVector {
    pub fn get(&self, stock: &StockId) -> Option<f64> {
        self.returns.get(stock).copied()
    }
}

/// Settled outcome of one week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyResult {
    pub week: u32,
    pub portfolio: Portfolio,
    pub portfolio_return: f64,
    pub universe_avg_return: f64,
    pub cash_fraction: f64,
}

/// Wealth levels starting at 1.0, extended by one level per settled week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityCurve {
    levels: Vec<f64>,
}

impl Default for EquityCurve {
    fn default() -> Self {
        EquityCurve { levels: vec![1.0] }
    }
}

impl EquityCurve {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_return(&mut self, weekly_return: f64) {
        let next = self.latest() * (1.0 + weekly_return);
        self.levels.push(next);
    }

    pub fn latest(&self) -> f64 {
        *self.levels.last().expect("curve starts at 1.0")
    }

    /// Wealth levels including the leading 1.0.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Number of settled weeks (excludes the leading 1.0).
    pub fn len(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Open of the first trading day and close of the last trading day the stock
/// actually traded... a missing boundary bar is an error; such stocks are
/// filtered out of the tradable set upstream.
pub fn execution_prices(
    stock: &StockId,
    week: &TradingWeek,
    data: &Dataset,
) -> Result<ExecutionPrices, BacktestError> {
    let missing = |day, boundary| BacktestError::MissingBoundaryBar {
        stock: stock.clone(),
        week: week.index,
        day,
        boundary,
    };
    let first = data
        .bar(stock, week.first_day())
        .ok_or_else(|| missing(week.first_day(), "first"))?;
    let last = data
        .bar(stock, week.last_day())
        .ok_or_else(|| missing(week.last_day(), "last"))?;
    Ok(ExecutionPrices {
        stock: stock.clone(),
        week: week.index,
        buy: first.open,
        sell: last.close,
    })
}

/// Weekly return `(sell - buy) / buy`.
pub fn stock_return(prices: &ExecutionPrices) -> f64 {
    (prices.sell - prices.buy) / prices.buy
}

/// Dot product of weights and returns; unallocated capital earns zero.
pub fn portfolio_return(
    portfolio: &Portfolio,
    returns: &ReturnVector,
) -> Result<f64, BacktestError> {
    let mut total = 0.0;
    for (stock, weight) in portfolio.weights() {
        let r = returns.get(stock).ok_or_else(|| BacktestError::MissingReturn {
            stock: stock.clone(),
            week: returns.week,
        })?;
        total += weight * r;
    }
    Ok(total)
}

/// The per-week tradable universe: stocks with bars on both boundary days.
/// Returns (tradable, excluded).
pub fn tradable_universe(
    universe: &[StockId],
    week: &TradingWeek,
    data: &Dataset,
) -> (Vec<StockId>, Vec<StockId>) {
    let mut tradable = Vec::new();
    let mut excluded = Vec::new();
    for stock in universe {
        let has_both = data.bar(stock, week.first_day()).is_some()
            && data.bar(stock, week.last_day()).is_some();
        if has_both {
            tradable.push(stock.clone());
        } else {
            excluded.push(stock.clone());
        }
    }
    (tradable, excluded)
}

/// Per-side transaction cost in basis points of traded notional. The weekly
/// protocol buys and fully liquidates, so each allocated fraction is charged
/// twice. Default zero.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CostModel {
    pub transaction_cost_bps: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            transaction_cost_bps: 0.0,
        }
    }
}

impl CostModel {
    /// Round-trip cost drag on the week's return for a given gross weight.
    pub fn round_trip_drag(&self, gross_weight: f64) -> f64 {
        gross_weight * self.transaction_cost_bps / 10_000.0 * 2.0
    }
}

/// Settles week `t`: returns for the whole tradable universe, the portfolio
/// return net of costs, and the (gross) universe average.
pub fn run_settlement(
    week: &TradingWeek,
    portfolio: &Portfolio,
    universe: &[StockId],
    data: &Dataset,
    costs: &CostModel,
) -> Result<(WeeklyResult, ReturnVector), BacktestError> {
    let (tradable, _) = tradable_universe(universe, week, data);
    let mut returns = BTreeMap::new();
    for stock in &tradable {
        let prices = execution_prices(stock, week, data)?;
        returns.insert(stock.clone(), stock_return(&prices));
    }
    let vector = ReturnVector {
        week: week.index,
        returns,
    };
    let realized = portfolio_return(portfolio, &vector)? - costs.round_trip_drag(portfolio.gross_weight());
    let universe_avg = if vector.returns.is_empty() {
        0.0
    } else {
        vector.returns.values().sum::<f64>() / vector.returns.len() as f64
    };
    let result = WeeklyResult {
        week: week.index,
        portfolio: portfolio.clone(),
        portfolio_return: realized,
        universe_avg_return: universe_avg,
        cash_fraction: portfolio.cash_fraction(),
    };
    Ok((result, vector))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{DailyBar, DateRange, TradingCalendar};
    use chrono::NaiveDate;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn sid(s: &str) -> StockId {
        StockId::new(s).unwrap()
    }

    fn bar(sym: &str, date: &str, open: f64, close: f64) -> DailyBar {
        DailyBar {
            stock: sid(sym),
            date: d(date),
            open,
            high: open.max(close) + 1.0,
            low: open.min(close) - 1.0,
            close,
            volume: 100,
        }
    }

    fn prices(buy: f64, sell: f64) -> ExecutionPrices {
        ExecutionPrices {
            stock: sid("A"),
            week: 1,
            buy,
            sell,
        }
    }

    #[test]
    fn stock_return_hand_cases() {
        assert!((stock_return(&prices(100.0, 105.0)) - 0.05).abs() < 1e-15);
        assert_eq!(stock_return(&prices(100.0, 100.0)), 0.0);
        assert!((stock_return(&prices(80.0, 60.0)) - (-0.25)).abs() < 1e-15);
    }

    fn week_of(bars: &[DailyBar]) -> TradingWeek {
        let range = DateRange::new(d("2022-05-16"), d("2022-05-22"));
        TradingCalendar::build(bars, range).unwrap().week(1).unwrap().clone()
    }

    #[test]
    fn execution_prices_full_week() {
        let bars = vec![
            bar("A", "2022-05-16", 100.0, 101.0),
            bar("A", "2022-05-17", 101.0, 102.0),
            bar("A", "2022-05-20", 103.0, 105.0),
        ];
        let data = Dataset::new(bars.clone(), vec![], vec![]);
        let week = week_of(&bars);
        let p = execution_prices(&sid("A"), &week, &data).unwrap();
        assert_eq!((p.buy, p.sell), (100.0, 105.0));
    }

    #[test]
    fn execution_prices_degenerate_single_day_week() {
        let bars = vec![bar("A", "2022-05-18", 100.0, 103.0)];
        let data = Dataset::new(bars.clone(), vec![], vec![]);
        let week = week_of(&bars);
        let p = execution_prices(&sid("A"), &week, &data).unwrap();
        assert_eq!((p.buy, p.sell), (100.0, 103.0));
    }

    #[test]
    fn last_trading_day_moves_with_missing_friday() {
        // AAPL trades through Thursday only; Friday has another stock's bar,
        // so the week's last trading day is Friday and AAPL is not tradable.
        let bars = vec![
            bar("A", "2022-05-16", 100.0, 101.0),
            bar("A", "2022-05-19", 101.0, 104.0),
            bar("B", "2022-05-16", 50.0, 51.0),
            bar("B", "2022-05-20", 51.0, 53.0),
        ];
        let data = Dataset::new(bars.clone(), vec![], vec![]);
        let week = week_of(&bars);
        assert_eq!(week.last_day(), d("2022-05-20"));
        assert!(matches!(
            execution_prices(&sid("A"), &week, &data),
            Err(BacktestError::MissingBoundaryBar { boundary: "last", .. })
        ));

        // With only AAPL bars in the picture, Thursday is the last trading
        // day and the close settles there.
        let solo = &bars[..2];
        let week = week_of(solo);
        let solo_data = Dataset::new(solo.to_vec(), vec![], vec![]);
        let p = execution_prices(&sid("A"), &week, &solo_data).unwrap();
        assert_eq!((p.buy, p.sell), (100.0, 104.0));
    }

    fn rv(pairs: &[(&str, f64)]) -> ReturnVector {
        ReturnVector {
            week: 1,
            returns: pairs.iter().map(|(s, r)| (sid(s), *r)).collect(),
        }
    }

    #[test]
    fn portfolio_return_cases() {
        let all_cash = Portfolio::all_cash(1);
        assert_eq!(portfolio_return(&all_cash, &rv(&[("A", 0.1)])).unwrap(), 0.0);

        let half_half = Portfolio::from_weights(1, [("A", 0.5), ("B", 0.5)]);
        let r = portfolio_return(&half_half, &rv(&[("A", 0.1), ("B", -0.02)])).unwrap();
        assert!((r - 0.04).abs() < 1e-15);

        // 0.6 in A, 0.4 cash; B's return is ignored.
        let partial = Portfolio::from_weights(1, [("A", 0.6)]);
        let r = portfolio_return(&partial, &rv(&[("A", 0.05), ("B", 0.3)])).unwrap();
        assert!((r - 0.03).abs() < 1e-15);

        let missing = Portfolio::from_weights(1, [("C", 0.5)]);
        assert!(matches!(
            portfolio_return(&missing, &rv(&[("A", 0.1)])),
            Err(BacktestError::MissingReturn { .. })
        ));
    }

    #[test]
    fn portfolio_return_is_linear_and_bounded() {
        let returns = rv(&[("A", 0.08), ("B", -0.03), ("C", 0.01)]);
        let w = Portfolio::from_weights(1, [("A", 0.4), ("B", 0.3), ("C", 0.2)]);
        let base = portfolio_return(&w, &returns).unwrap();
        for alpha in [0.0, 0.25, 0.5, 1.0] {
            let scaled = Portfolio::from_weights(
                1,
                w.weights().iter().map(|(s, v)| (s.as_str(), v * alpha)),
            );
            let r = portfolio_return(&scaled, &returns).unwrap();
            assert!((r - alpha * base).abs() < 1e-15);
        }
        let gross = w.gross_weight();
        let min_r = -0.03;
        let max_r = 0.08;
        assert!(base >= gross * min_r - 1e-15 && base <= gross * max_r + 1e-15);
    }

    #[test]
    fn settlement_produces_universe_returns_and_average() {
        let bars = vec![
            bar("A", "2022-05-16", 100.0, 100.0),
            bar("A", "2022-05-20", 100.0, 110.0),
            bar("B", "2022-05-16", 100.0, 100.0),
            bar("B", "2022-05-20", 100.0, 90.0),
        ];
        let data = Dataset::new(bars.clone(), vec![], vec![]);
        let week = week_of(&bars);
        let universe = vec![sid("A"), sid("B")];

        let all_cash = Portfolio::all_cash(1);
        let costs = CostModel::default();
        let (result, vector) = run_settlement(&week, &all_cash, &universe, &data, &costs).unwrap();
        assert_eq!(result.portfolio_return, 0.0);
        assert!(result.universe_avg_return.abs() < 1e-15);
        assert_eq!(vector.returns.len(), 2);
        assert_eq!(result.cash_fraction, 1.0);

        // Equal weights across the whole universe settle at the average.
        let equal = Portfolio::from_weights(1, [("A", 0.5), ("B", 0.5)]);
        let (result, _) = run_settlement(&week, &equal, &universe, &data, &costs).unwrap();
        assert!((result.portfolio_return - result.universe_avg_return).abs() < 1e-15);
    }

    #[test]
    fn cost_model_charges_both_sides_of_the_round_trip() {
        let bars = vec![
            bar("A", "2022-05-16", 100.0, 100.0),
            bar("A", "2022-05-20", 100.0, 105.0),
        ];
        let data = Dataset::new(bars.clone(), vec![], vec![]);
        let week = week_of(&bars);
        let universe = vec![sid("A")];
        let fully_invested = Portfolio::from_weights(1, [("A", 1.0)]);

        // 50 bps per side on full notional: 0.05 - 0.01 = 0.04.
        let costs = CostModel {
            transaction_cost_bps: 50.0,
        };
        let (result, _) =
            run_settlement(&week, &fully_invested, &universe, &data, &costs).unwrap();
        assert!((result.portfolio_return - 0.04).abs() < 1e-15);
        // Universe average stays gross of costs.
        assert!((result.universe_avg_return - 0.05).abs() < 1e-15);

        // The default model charges nothing.
        let (result, _) = run_settlement(
            &week,
            &fully_invested,
            &universe,
            &data,
            &CostModel::default(),
        )
        .unwrap();
        assert!((result.portfolio_return - 0.05).abs() < 1e-15);
    }

    #[test]
    fn equity_curve_recursion_is_exact() {
        let mut curve = EquityCurve::new();
        let returns = [0.05, -0.02, 0.0, 0.13, -0.07];
        for r in returns {
            curve.push_return(r);
        }
        assert_eq!(curve.len(), returns.len());
        let levels = curve.levels();
        for (i, r) in returns.iter().enumerate() {
            assert!((levels[i + 1] / levels[i] - 1.0 - r).abs() < 1e-12);
        }
    }
}
