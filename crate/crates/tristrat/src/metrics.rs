//! Portfolio performance metrics over weekly return sequences: accumulated
//! return, Sharpe ratio, Calmar ratio, and maximum drawdown.
//!
//! Sharpe uses the sample (n-1) standard deviation on a weekly basis with a
//! zero risk-free rate and is not annualized. Drawdown is computed on the
//! wealth curve `W_t = prod(1 + R_i)` with `W_0 = 1`, which avoids the
//! singularity of dividing by an accumulated return that crosses zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{metric} is undefined: {reason}")]
    Undefined {
        metric: &'static str,
        reason: &'static str,
    },
}

fn undefined(metric: &'static str, reason: &'static str) -> MetricsError {
    MetricsError::Undefined { metric, reason }
}

/// Compounded return over the full sequence: `prod(1 + R_t) - 1`.
pub fn accumulated_return(returns: &[f64]) -> f64 {
    returns.iter().fold(1.0, |acc, r| acc * (1.0 + r)) - 1.0
}

/// Mean over sample standard deviation of weekly returns.
pub fn sharpe(returns: &[f64]) -> Result<f64, MetricsError> {
    if returns.len() < 2 {
        return Err(undefined("sharpe", "needs at least two returns"));
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let variance = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if variance == 0.0 {
        return Err(undefined("sharpe", "zero return variance"));
    }
    Ok(mean / variance.sqrt())
}

/// Worst peak-to-trough decline of the wealth curve, in [-1, 0].
pub fn max_drawdown(returns: &[f64]) -> f64 {
    let mut wealth = 1.0_f64;
    let mut peak = 1.0_f64;
    let mut mdd = 0.0_f64;
    for r in returns {
        wealth *= 1.0 + r;
        peak = peak.max(wealth);
        mdd = mdd.min((wealth - peak) / peak);
    }
    mdd
}

/// Accumulated return over the magnitude of maximum drawdown.
pub fn calmar(accumulated: f64, mdd: f64) -> Result<f64, MetricsError> {
    if mdd == 0.0 {
        return Err(undefined("calmar", "zero maximum drawdown"));
    }
    Ok(accumulated / mdd.abs())
}

/// All four metrics for one return sequence. Undefined metrics are `None`
/// rather than infinities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub weeks: usize,
    pub accumulated_return: f64,
    pub sharpe: Option<f64>,
    pub calmar: Option<f64>,
    pub max_drawdown: f64,
}

impl MetricsReport {
    pub fn from_returns(returns: &[f64]) -> Self {
        let ar = accumulated_return(returns);
        let mdd = max_drawdown(returns);
        MetricsReport {
            weeks: returns.len(),
            accumulated_return: ar,
            sharpe: sharpe(returns).ok(),
            calmar: calmar(ar, mdd).ok(),
            max_drawdown: mdd,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accumulated_return_identity_and_hand_case() {
        assert_eq!(accumulated_return(&[0.0]), 0.0);
        // (1.10)(0.95) - 1 = 0.045 by hand.
        assert!((accumulated_return(&[0.10, -0.05]) - 0.045).abs() < 1e-15);
    }

    #[test]
    fn sharpe_zero_mean_and_undefined_cases() {
        assert_eq!(sharpe(&[0.1, -0.1]).unwrap(), 0.0);
        assert!(matches!(
            sharpe(&[0.02, 0.02, 0.02]),
            Err(MetricsError::Undefined { metric: "sharpe", .. })
        ));
        assert!(sharpe(&[0.02]).is_err());
    }

    #[test]
    fn sharpe_matches_two_pass_oracle() {
        let returns: Vec<f64> = (0..100)
            .map(|i| ((i * 37 % 19) as f64 - 9.0) / 100.0)
            .collect();
        let mean = returns.iter().sum::<f64>() / returns.len() as f64;
        let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
            / (returns.len() as f64 - 1.0);
        let want = mean / var.sqrt();
        assert!((sharpe(&returns).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn drawdown_cases() {
        assert_eq!(max_drawdown(&[0.01, 0.0, 0.03]), 0.0);
        // Peak 1.2 then 1.08: (1.08 - 1.2) / 1.2 = -0.1 by hand.
        assert!((max_drawdown(&[0.2, -0.1]) - (-0.1)).abs() < 1e-15);
        // A single losing week draws down from the starting wealth of 1.
        assert!((max_drawdown(&[-0.25]) - (-0.25)).abs() < 1e-15);
    }

    #[test]
    fn drawdown_matches_brute_force() {
        let returns: Vec<f64> = (0..150)
            .map(|i| ((i * 29 % 23) as f64 - 11.0) / 60.0)
            .collect();
        let got = max_drawdown(&returns);

        // O(T^2) oracle over the wealth curve including W_0 = 1.
        let mut wealth = vec![1.0];
        for r in &returns {
            wealth.push(wealth.last().unwrap() * (1.0 + r));
        }
        let mut want = 0.0_f64;
        for t in 0..wealth.len() {
            let peak = wealth[..=t].iter().cloned().fold(f64::MIN, f64::max);
            want = want.min((wealth[t] - peak) / peak);
        }
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn mdd_depends_on_return_order_while_ar_does_not() {
        // Adjacent losses compound into a deeper trough; separating them with
        // a recovering gain leaves only the single-week dips.
        let grouped = [-0.1, -0.1, 0.3];
        let separated = [-0.1, 0.3, -0.1];
        let ar_a = accumulated_return(&grouped);
        let ar_b = accumulated_return(&separated);
        assert!((ar_a - ar_b).abs() < 1e-12);
        assert!((max_drawdown(&grouped) - (-0.19)).abs() < 1e-12);
        assert!((max_drawdown(&separated) - (-0.1)).abs() < 1e-12);
    }

    #[test]
    fn calmar_cases() {
        assert_eq!(calmar(0.5, -0.1).unwrap(), 5.0);
        assert_eq!(calmar(0.0, -0.2).unwrap(), 0.0);
        assert!(matches!(
            calmar(0.5, 0.0),
            Err(MetricsError::Undefined { metric: "calmar", .. })
        ));
    }

    #[test]
    fn report_gathers_all_metrics() {
        let report = MetricsReport::from_returns(&[0.2, -0.1]);
        assert_eq!(report.weeks, 2);
        assert!((report.accumulated_return - 0.08).abs() < 1e-15);
        assert!((report.max_drawdown + 0.1).abs() < 1e-15);
        let calmar = report.calmar.unwrap();
        assert!((calmar - 0.8).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn ar_is_permutation_invariant_and_mdd_bounded(
            mut returns in proptest::collection::vec(-0.5f64..0.5, 2..40),
        ) {
            let ar = accumulated_return(&returns);
            let mdd = max_drawdown(&returns);
            prop_assert!((-1.0..=0.0).contains(&mdd));

            returns.reverse();
            let ar_rev = accumulated_return(&returns);
            prop_assert!((ar - ar_rev).abs() <= 1e-9 * (1.0 + ar.abs()));
        }

        #[test]
        fn calmar_sign_matches_ar_sign(returns in proptest::collection::vec(-0.4f64..0.4, 3..30)) {
            let report = MetricsReport::from_returns(&returns);
            if let Some(calmar) = report.calmar {
                prop_assert!(report.max_drawdown < 0.0);
                prop_assert_eq!(
                    calmar > 0.0,
                    report.accumulated_return > 0.0
                );
            } else {
                prop_assert_eq!(report.max_drawdown, 0.0);
            }
        }
    }
}
