//! The 1/N market reference and the three rule-based factor strategies.
//!
//! Factor portfolios hold the five highest-scoring eligible stocks at 20%
//! each, evaluated on the last trading day of the preceding week. The 1/N
//! benchmark spreads across the whole tradable universe and is exempt from
//! the five-position cap (it is a market reference, not an agent output).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::IndicatorRow;
use crate::market_data::StockId;
use crate::portfolio::Portfolio;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("cannot build an equal-weight portfolio over an empty universe")]
    EmptyUniverse,
}

/// Which baseline drives selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// Equal weight across the tradable universe.
    #[serde(rename = "1n", alias = "equal_weight")]
    EqualWeight,
    Sma,
    Macd,
    Boll,
}

impl Baseline {
    pub fn as_str(&self) -> &'static str {
        match self {
            Baseline::EqualWeight => "1n",
            Baseline::Sma => "sma",
            Baseline::Macd => "macd",
            Baseline::Boll => "boll",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1n" | "equal_weight" | "equal-weight" => Some(Baseline::EqualWeight),
            "sma" => Some(Baseline::Sma),
            "macd" => Some(Baseline::Macd),
            "boll" => Some(Baseline::Boll),
            _ => None,
        }
    }
}

/// Indicator-derived factor kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Sma,
    Macd,
    Boll,
}

/// 1/N over the tradable universe.
pub fn equal_weight(week: u32, tradable: &[StockId]) -> Result<Portfolio, BaselineError> {
    if tradable.is_empty() {
        return Err(BaselineError::EmptyUniverse);
    }
    let w = 1.0 / tradable.len() as f64;
    let weights: BTreeMap<StockId, f64> = tradable.iter().map(|s| (s.clone(), w)).collect();
    Ok(Portfolio::from_stock_weights(week, weights))
}

/// Cross-sectionally comparable factor score from one indicator row (the last
/// trading day of week t-1). `None` when the indicator is still warming up;
/// such stocks drop out of that week's ranking.
///
/// SMA factor: close/SMA - 1. MACD factor: histogram. BOLL factor: %B, the
/// close's position within the bands (0.5 when the bands have zero width).
pub fn factor_score(kind: FactorKind, row: &IndicatorRow) -> Option<f64> {
    match kind {
        FactorKind::Sma => row.sma.map(|sma| row.close / sma - 1.0),
        FactorKind::Macd => row.macd_hist,
        FactorKind::Boll => match (row.boll_upper, row.boll_lower) {
            (Some(upper), Some(lower)) => {
                let width = upper - lower;
                if width == 0.0 {
                    Some(0.5)
                } else {
                    Some((row.close - lower) / width)
                }
            }
            _ => None,
        },
    }
}

/// Number of positions a factor baseline holds.
pub const FACTOR_TOP_N: usize = 5;
/// Fixed weight per factor position.
pub const FACTOR_WEIGHT: f64 = 0.20;

/// The five highest-factor stocks at 20% each; ties break toward the
/// lexicographically smaller ticker. Fewer than five eligible stocks all get
/// 20% with the remainder in cash.
pub fn top5_portfolio(week: u32, factors: &BTreeMap<StockId, f64>) -> Portfolio {
    let mut ranked: Vec<(&StockId, f64)> = factors.iter().map(|(s, &f)| (s, f)).collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(b.0))
    });
    let weights: BTreeMap<StockId, f64> = ranked
        .into_iter()
        .take(FACTOR_TOP_N)
        .map(|(s, _)| (s.clone(), FACTOR_WEIGHT))
        .collect();
    Portfolio::from_stock_weights(week, weights)
}
