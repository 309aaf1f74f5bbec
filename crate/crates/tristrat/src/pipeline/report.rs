//! Final run outputs: `report.json`, `equity.csv`, and the human-readable
//! metrics table.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::metrics::MetricsReport;

use super::ledger::WeekRecord;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One evaluated week in the report and equity curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyRow {
    pub week: u32,
    pub eval_index: usize,
    pub date: NaiveDate,
    pub portfolio_return: f64,
    pub wealth: f64,
}

/// Summary of a completed (or partially completed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub mode: String,
    pub model: String,
    pub metrics: MetricsReport,
    pub final_wealth: f64,
    pub weekly: Vec<WeeklyRow>,
}

impl RunReport {
    pub fn from_weeks(mode: &str, model: &str, weeks: &[WeekRecord]) -> Self {
        let returns: Vec<f64> = weeks.iter().map(|w| w.portfolio_return).collect();
        let weekly: Vec<WeeklyRow> = weeks
            .iter()
            .map(|w| WeeklyRow {
                week: w.week,
                eval_index: w.eval_index,
                date: w.last_day,
                portfolio_return: w.portfolio_return,
                wealth: w.wealth,
            })
            .collect();
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            mode: mode.to_string(),
            model: model.to_string(),
            metrics: MetricsReport::from_returns(&returns),
            final_wealth: weekly.last().map(|w| w.wealth).unwrap_or(1.0),
            weekly,
        }
    }

    /// Writes `report.json` and `equity.csv` into `dir`; returns their paths.
    pub fn write_files(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let report_path = dir.join("report.json");
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(&report_path, json + "\n")?;

        let equity_path = dir.join("equity.csv");
        let mut out = std::fs::File::create(&equity_path)?;
        writeln!(out, "week,date,wealth,return")?;
        for row in &self.weekly {
            writeln!(
                out,
                "{},{},{},{}",
                row.week, row.date, row.wealth, row.portfolio_return
            )?;
        }
        Ok((report_path, equity_path))
    }

    pub fn from_json_file(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

/// One row of the comparison table printed by the report command.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub name: String,
    pub weeks: usize,
    pub metrics: Option<MetricsReport>,
}

/// Renders rows as an aligned AR(%) / SR / CR table. Runs with no completed
/// weeks say so explicitly.
pub fn render_table(rows: &[TableRow]) -> String {
    let name_width = rows
        .iter()
        .map(|r| r.name.len())
        .chain(["run".len()])
        .max()
        .unwrap_or(3);
    let mut lines = vec![format!(
        "{:<name_width$}  {:>6}  {:>10}  {:>8}  {:>8}",
        "run", "weeks", "AR(%)", "SR", "CR"
    )];
    for row in rows {
        match &row.metrics {
            Some(m) => {
                let fmt_opt = |v: Option<f64>| match v {
                    Some(v) => format!("{v:.3}"),
                    None => "n/a".to_string(),
                };
                lines.push(format!(
                    "{:<name_width$}  {:>6}  {:>10.2}  {:>8}  {:>8}",
                    row.name,
                    row.weeks,
                    m.accumulated_return * 100.0,
                    fmt_opt(m.sharpe),
                    fmt_opt(m.calmar),
                ));
            }
            None => lines.push(format!(
                "{:<name_width$}  no completed weeks",
                row.name
            )),
        }
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn record(t: u32, r: f64, wealth: f64) -> WeekRecord {
        WeekRecord {
            week: t,
            eval_index: (t - 4) as usize,
            first_day: "2022-06-13".parse().unwrap(),
            last_day: "2022-06-17".parse().unwrap(),
            strategy: String::new(),
            tradable: vec![],
            excluded: vec![],
            portfolio: BTreeMap::new(),
            stock_returns: BTreeMap::new(),
            portfolio_return: r,
            universe_avg_return: r,
            cash_fraction: 1.0,
            wealth,
            next_strategy: String::new(),
            flags: vec![],
            calls: vec![],
        }
    }

    #[test]
    fn report_files_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let weeks = vec![record(5, 0.02, 1.02), record(6, -0.01, 1.0098)];
        let report = RunReport::from_weeks("1n", "none", &weeks);
        assert_eq!(report.metrics.weeks, 2);
        let (json_path, csv_path) = report.write_files(tmp.path()).unwrap();

        let reloaded = RunReport::from_json_file(&json_path).unwrap();
        assert_eq!(reloaded, report);

        let csv = std::fs::read_to_string(csv_path).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("week,date,wealth,return"));
        assert!(lines.next().unwrap().starts_with("5,2022-06-17,1.02,0.02"));
    }

    #[test]
    fn table_aligns_and_handles_empty_runs() {
        let rows = vec![
            TableRow {
                name: "agents".to_string(),
                weeks: 8,
                metrics: Some(MetricsReport::from_returns(&[0.02, -0.01, 0.03])),
            },
            TableRow {
                name: "1n".to_string(),
                weeks: 0,
                metrics: None,
            },
        ];
        let table = render_table(&rows);
        assert!(table.contains("AR(%)"));
        assert!(table.contains("no completed weeks"));
        let header_cols = table.lines().next().unwrap();
        assert!(header_cols.contains("SR") && header_cols.contains("CR"));
    }
}
