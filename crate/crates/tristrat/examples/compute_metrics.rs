//! Compute accumulated return, Sharpe, Calmar, and maximum drawdown from a
//! weekly return sequence.
//!
//! ```bash
//! cargo run --example compute_metrics
//! ```

use tristrat::metrics::{accumulated_return, calmar, max_drawdown, sharpe, MetricsReport};

fn main() {
    let returns = [
        0.021, -0.008, 0.015, 0.004, -0.027, 0.019, 0.011, -0.013, 0.006, 0.024,
        -0.005, 0.009, -0.018, 0.014, 0.002,
    ];

    let ar = accumulated_return(&returns);
    let mdd = max_drawdown(&returns);
    println!("{} weekly returns", returns.len());
    println!("accumulated return: {:+.4}%  (product of 1+R_t, minus 1)", ar * 100.0);
    println!("max drawdown:       {:+.4}%  (worst peak-to-trough of the wealth curve)", mdd * 100.0);
    match sharpe(&returns) {
        Ok(sr) => println!("sharpe:             {sr:.4}   (weekly basis, zero risk-free rate, not annualized)"),
        Err(e) => println!("sharpe:             undefined ({e})"),
    }
    match calmar(ar, mdd) {
        Ok(cr) => println!("calmar:             {cr:.4}   (AR over |MDD|)"),
        Err(e) => println!("calmar:             undefined ({e})"),
    }

    // Degenerate sequences report undefined metrics instead of infinities.
    let flat = [0.01, 0.01, 0.01];
    let report = MetricsReport::from_returns(&flat);
    println!(
        "\nconstant returns {flat:?}: AR {:+.4}%, sharpe {:?}, calmar {:?} (no variance, no drawdown)",
        report.accumulated_return * 100.0,
        report.sharpe,
        report.calmar
    );
}
