//! Technical indicators over daily bar series: SMA, ATR, RSI, MACD, and
//! Bollinger Bands.
//!
//! Outputs are aligned with the input series; entries are `None` during
//! warm-up rather than zero-filled. No output at index `d` depends on bars
//! after `d`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::DailyBar;

/// Three aligned optional series (upper/mid/lower or line/signal/histogram).
pub type TripleSeries = (Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndicatorError {
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("macd fast period {fast} must be smaller than slow period {slow}")]
    BadMacdPeriods { fast: usize, slow: usize },
}

/// Indicator windows. The conventional defaults are SMA 20, ATR 14, RSI 14,
/// MACD 12/26/9, and Bollinger 20 with 2 standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorParams {
    pub sma_window: usize,
    pub atr_window: usize,
    pub rsi_window: usize,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub boll_window: usize,
    pub boll_k: f64,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        IndicatorParams {
            sma_window: 20,
            atr_window: 14,
            rsi_window: 14,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            boll_window: 20,
            boll_k: 2.0,
        }
    }
}

impl IndicatorParams {
    pub fn validate(&self) -> Result<(), IndicatorError> {
        for w in [
            self.sma_window,
            self.atr_window,
            self.rsi_window,
            self.macd_fast,
            self.macd_slow,
            self.macd_signal,
            self.boll_window,
        ] {
            if w == 0 {
                return Err(IndicatorError::ZeroWindow);
            }
        }
        if self.macd_fast >= self.macd_slow {
            return Err(IndicatorError::BadMacdPeriods {
                fast: self.macd_fast,
                slow: self.macd_slow,
            });
        }
        Ok(())
    }
}

/// One bar date with every indicator value defined at that date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorRow {
    pub date: NaiveDate,
    pub close: f64,
    pub sma: Option<f64>,
    pub atr: Option<f64>,
    pub rsi: Option<f64>,
    pub macd_line: Option<f64>,
    pub macd_signal: Option<f64>,
    pub macd_hist: Option<f64>,
    pub boll_upper: Option<f64>,
    pub boll_mid: Option<f64>,
    pub boll_lower: Option<f64>,
}

/// Simple moving average with a rolling sum; first `window - 1` entries absent.
pub fn sma(closes: &[f64], window: usize) -> Result<Vec<Option<f64>>, IndicatorError> {
    if window == 0 {
        return Err(IndicatorError::ZeroWindow);
    }
    let mut out = vec![None; closes.len()];
    let mut sum = 0.0;
    for (i, &c) in closes.iter().enumerate() {
        sum += c;
        if i >= window {
            sum -= closes[i - window];
        }
        if i + 1 >= window {
            out[i] = Some(sum / window as f64);
        }
    }
    Ok(out)
}

/// True range of bar `d` given the previous close.
fn true_range(bar: &DailyBar, prev_close: f64) -> f64 {
    let hl = bar.high - bar.low;
    let hc = (bar.high - prev_close).abs();
    let lc = (bar.low - prev_close).abs();
    hl.max(hc).max(lc)
}

/// Wilder-smoothed average true range. The seed at index `window` is the mean
/// of the first `window` true ranges (true range needs a previous close, so
/// the series starts at index 1).
pub fn atr(bars: &[DailyBar], window: usize) -> Result<Vec<Option<f64>>, IndicatorError> {
    if window == 0 {
        return Err(IndicatorError::ZeroWindow);
    }
    let mut out = vec![None; bars.len()];
    if bars.len() < 2 {
        return Ok(out);
    }
    let trs: Vec<f64> = bars
        .windows(2)
        .map(|pair| true_range(&pair[1], pair[0].close))
        .collect();
    if trs.len() < window {
        return Ok(out);
    }
    let mut value = trs[..window].iter().sum::<f64>() / window as f64;
    out[window] = Some(value);
    for (i, &tr) in trs.iter().enumerate().skip(window) {
        value = (value * (window as f64 - 1.0) + tr) / window as f64;
        out[i + 1] = Some(value);
    }
    Ok(out)
}

/// Wilder RSI in [0, 100]; an interval with neither gains nor losses reads 50.
pub fn rsi(closes: &[f64], window: usize) -> Result<Vec<Option<f64>>, IndicatorError> {
    if window == 0 {
        return Err(IndicatorError::ZeroWindow);
    }
    let mut out = vec![None; closes.len()];
    if closes.len() < window + 1 {
        return Ok(out);
    }
    let gains_losses: Vec<(f64, f64)> = closes
        .windows(2)
        .map(|pair| {
            let change = pair[1] - pair[0];
            (change.max(0.0), (-change).max(0.0))
        })
        .collect();
    let mut avg_gain = gains_losses[..window].iter().map(|gl| gl.0).sum::<f64>() / window as f64;
    let mut avg_loss = gains_losses[..window].iter().map(|gl| gl.1).sum::<f64>() / window as f64;
    out[window] = Some(rsi_value(avg_gain, avg_loss));
    for (i, &(gain, loss)) in gains_losses.iter().enumerate().skip(window) {
        avg_gain = (avg_gain * (window as f64 - 1.0) + gain) / window as f64;
        avg_loss = (avg_loss * (window as f64 - 1.0) + loss) / window as f64;
        out[i + 1] = Some(rsi_value(avg_gain, avg_loss));
    }
    Ok(out)
}

fn rsi_value(avg_gain: f64, avg_loss: f64) -> f64 {
    if avg_gain == 0.0 && avg_loss == 0.0 {
        50.0
    } else if avg_loss == 0.0 {
        100.0
    } else {
        100.0 - 100.0 / (1.0 + avg_gain / avg_loss)
    }
}

/// Exponential moving average seeded with the SMA of the first `n` values,
/// then `ema_t = alpha * x_t + (1 - alpha) * ema_{t-1}` with `alpha = 2/(n+1)`.
fn ema(values: &[f64], n: usize) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    if n == 0 || values.len() < n {
        return out;
    }
    let alpha = 2.0 / (n as f64 + 1.0);
    let mut value = values[..n].iter().sum::<f64>() / n as f64;
    out[n - 1] = Some(value);
    for (i, &x) in values.iter().enumerate().skip(n) {
        value = alpha * x + (1.0 - alpha) * value;
        out[i] = Some(value);
    }
    out
}

/// MACD line, signal line, and histogram.
pub fn macd(
    closes: &[f64],
    fast: usize,
    slow: usize,
    signal: usize,
) -> Result<TripleSeries, IndicatorError> {
    if fast == 0 || slow == 0 || signal == 0 {
        return Err(IndicatorError::ZeroWindow);
    }
    if fast >= slow {
        return Err(IndicatorError::BadMacdPeriods { fast, slow });
    }
    let n = closes.len();
    let ema_fast = ema(closes, fast);
    let ema_slow = ema(closes, slow);

    let mut line = vec![None; n];
    for i in 0..n {
        if let (Some(f), Some(s)) = (ema_fast[i], ema_slow[i]) {
            line[i] = Some(f - s);
        }
    }

    // Signal line: EMA over the defined portion of the MACD line.
    let mut signal_out = vec![None; n];
    let defined: Vec<f64> = line.iter().flatten().copied().collect();
    let offset = n - defined.len();
    for (j, v) in ema(&defined, signal).into_iter().enumerate() {
        signal_out[offset + j] = v;
    }

    let mut hist = vec![None; n];
    for i in 0..n {
        if let (Some(l), Some(s)) = (line[i], signal_out[i]) {
            hist[i] = Some(l - s);
        }
    }
    Ok((line, signal_out, hist))
}

/// Bollinger Bands: SMA midline with bands at `k` population standard
/// deviations.
pub fn bollinger(
    closes: &[f64],
    window: usize,
    k: f64,
) -> Result<TripleSeries, IndicatorError> {
    if window == 0 {
        return Err(IndicatorError::ZeroWindow);
    }
    let n = closes.len();
    let mid = sma(closes, window)?;
    let mut upper = vec![None; n];
    let mut lower = vec![None; n];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (i, &c) in closes.iter().enumerate() {
        sum += c;
        sum_sq += c * c;
        if i >= window {
            let old = closes[i - window];
            sum -= old;
            sum_sq -= old * old;
        }
        if i + 1 >= window {
            let mean = sum / window as f64;
            let variance = (sum_sq / window as f64 - mean * mean).max(0.0);
            let offset = k * variance.sqrt();
            upper[i] = Some(mean + offset);
            lower[i] = Some(mean - offset);
        }
    }
    Ok((upper, mid, lower))
}

/// Full indicator table for one stock's bar series, one row per bar date.
pub fn indicator_table(
    bars: &[DailyBar],
    params: &IndicatorParams,
) -> Result<Vec<IndicatorRow>, IndicatorError> {
    params.validate()?;
    let closes: Vec<f64> = bars.iter().map(|b| b.close).collect();
    let sma_vals = sma(&closes, params.sma_window)?;
    let atr_vals = atr(bars, params.atr_window)?;
    let rsi_vals = rsi(&closes, params.rsi_window)?;
    let (macd_line, macd_signal, macd_hist) =
        macd(&closes, params.macd_fast, params.macd_slow, params.macd_signal)?;
    let (boll_upper, boll_mid, boll_lower) =
        bollinger(&closes, params.boll_window, params.boll_k)?;

    Ok(bars
        .iter()
        .enumerate()
        .map(|(i, bar)| IndicatorRow {
            date: bar.date,
            close: bar.close,
            sma: sma_vals[i],
            atr: atr_vals[i],
            rsi: rsi_vals[i],
            macd_line: macd_line[i],
            macd_signal: macd_signal[i],
            macd_hist: macd_hist[i],
            boll_upper: boll_upper[i],
            boll_mid: boll_mid[i],
            boll_lower: boll_lower[i],
        })
        .collect())
}
