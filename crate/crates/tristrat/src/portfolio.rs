//! The weekly weight vector and its hard constraints.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::StockId;

/// Slack allowed on the gross-weight cap when validating provider output.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum PortfolioError {
    #[error("{stock} is not in this week's tradable universe")]
    UnknownStock { stock: String },
    #[error("weight {weight} for {stock} is outside [0, 1]")]
    WeightOutOfRange { stock: String, weight: f64 },
    #[error("gross weight {sum} exceeds 1")]
    GrossWeightExceedsOne { sum: f64 },
    #[error("{count} positions exceed the maximum of {max}")]
    TooManyPositions { count: usize, max: usize },
}

/// Fractions of capital per stock for one week; the unallocated remainder is
/// cash. Only strictly positive weights are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub week: u32,
    weights: BTreeMap<StockId, f64>,
}

impl Portfolio {
    pub fn all_cash(week: u32) -> Self {
        Portfolio {
            week,
            weights: BTreeMap::new(),
        }
    }

    /// Builds a portfolio from (symbol, weight) pairs, dropping zero weights.
    /// Panics on invalid symbols; intended for internal construction paths
    /// where symbols are already validated.
    pub fn from_weights<'a, I>(week: u32, weights: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let weights = weights
            .into_iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|(s, w)| (StockId::new(s).expect("valid symbol"), w))
            .collect();
        Portfolio { week, weights }
    }

    pub fn from_stock_weights(week: u32, weights: BTreeMap<StockId, f64>) -> Self {
        let weights = weights.into_iter().filter(|(_, w)| *w != 0.0).collect();
        Portfolio { week, weights }
    }

    pub fn weights(&self) -> &BTreeMap<StockId, f64> {
        &self.weights
    }

    pub fn weight_of(&self, stock: &StockId) -> f64 {
        self.weights.get(stock).copied().unwrap_or(0.0)
    }

    pub fn positions(&self) -> usize {
        self.weights.len()
    }

    pub fn gross_weight(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn cash_fraction(&self) -> f64 {
        1.0 - self.gross_weight()
    }

    pub fn is_all_cash(&self) -> bool {
        self.weights.is_empty()
    }

    /// Checks the hard constraints: every key in `tradable`, weights in
    /// [0, 1], gross weight at most 1 (plus tolerance), and at most
    /// `max_positions` nonzero entries.
    pub fn validate(
        &self,
        tradable: &[StockId],
        max_positions: usize,
    ) -> Result<(), PortfolioError> {
        for (stock, &weight) in &self.weights {
            if !tradable.contains(stock) {
                return Err(PortfolioError::UnknownStock {
                    stock: stock.as_str().to_string(),
                });
            }
            if !weight.is_finite() || !(0.0..=1.0).contains(&weight) {
                return Err(PortfolioError::WeightOutOfRange {
                    stock: stock.as_str().to_string(),
                    weight,
                });
            }
        }
        let sum = self.gross_weight();
        if sum > 1.0 + WEIGHT_SUM_TOLERANCE {
            return Err(PortfolioError::GrossWeightExceedsOne { sum });
        }
        if self.positions() > max_positions {
            return Err(PortfolioError::TooManyPositions {
                count: self.positions(),
                max: max_positions,
            });
        }
        Ok(())
    }
}
