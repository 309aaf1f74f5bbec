//! Command-line entry points: `ingest`, `backtest`, and `report`.
//!
//! The binary in `src/bin/tristrat.rs` only parses arguments and dispatches
//! here, so everything is callable (and tested) as a library.

use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::baselines::Baseline;
use crate::market_data::{
    load_daily_bars, load_fundamentals, load_news, write_daily_bars, write_fundamentals,
    write_news, DailyBar, Dataset, FundamentalReport, NewsItem,
};
use crate::pipeline::{
    read_ledger, render_table, RunConfig, RunMode, Runner, RunReport, TableRow,
};

#[derive(Debug, Parser)]
#[command(
    name = "tristrat",
    version,
    about = "Weekly portfolio backtesting with an LLM agent scoring/strategy/selection loop"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate raw data files and normalize them into a canonical store.
    Ingest(IngestArgs),
    /// Run a backtest described by a TOML config file.
    Backtest(BacktestArgs),
    /// Print a metrics table for one or more finished runs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Bar CSV files (header: symbol,date,open,high,low,close,volume).
    #[arg(long = "bars")]
    pub bars: Vec<PathBuf>,
    /// News JSONL files (symbol,date,title,summary).
    #[arg(long = "news")]
    pub news: Vec<PathBuf>,
    /// Fundamentals JSONL files (symbol,fiscal_quarter,release_date,statements).
    #[arg(long = "fundamentals")]
    pub fundamentals: Vec<PathBuf>,
    /// Canonical store directory to write.
    #[arg(long = "out")]
    pub out: PathBuf,
}

fn parse_baseline(raw: &str) -> std::result::Result<Baseline, String> {
    Baseline::parse(raw).ok_or_else(|| format!("unknown baseline {raw:?}: use 1n, sma, macd, or boll"))
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Run a rule-based baseline instead of the configured mode.
    #[arg(long, value_parser = parse_baseline, conflicts_with = "agents")]
    pub baseline: Option<Baseline>,
    /// Run the agent pipeline (overrides the configured mode).
    #[arg(long)]
    pub agents: bool,
    /// Serve agent responses from this cache directory only; no network.
    #[arg(long, value_name = "CACHE_DIR")]
    pub replay: Option<PathBuf>,
    /// Output directory (overrides the configured one).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Continue from the ledger already in the output directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Ledger files (ledger.jsonl) of finished runs.
    #[arg(required = true)]
    pub ledgers: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => cmd_ingest(&args),
        Command::Backtest(args) => cmd_backtest(&args),
        Command::Report(args) => cmd_report(&args),
    }
}

/// Loads, validates, merges, and rewrites raw files in canonical form.
/// Re-ingesting an already canonical store is byte-idempotent.
pub fn cmd_ingest(args: &IngestArgs) -> Result<()> {
    if args.bars.is_empty() && args.news.is_empty() && args.fundamentals.is_empty() {
        bail!("nothing to ingest: pass --bars, --news, or --fundamentals");
    }
    let mut bars: Vec<DailyBar> = Vec::new();
    for path in &args.bars {
        let loaded = load_daily_bars(open(path)?)
            .with_context(|| format!("{}", path.display()))?;
        println!("{}: {} bars", path.display(), loaded.len());
        bars.extend(loaded);
    }
    let mut news: Vec<NewsItem> = Vec::new();
    for path in &args.news {
        let loaded = load_news(open(path)?).with_context(|| format!("{}", path.display()))?;
        println!("{}: {} news items", path.display(), loaded.len());
        news.extend(loaded);
    }
    let mut fundamentals: Vec<FundamentalReport> = Vec::new();
    for path in &args.fundamentals {
        let loaded =
            load_fundamentals(open(path)?).with_context(|| format!("{}", path.display()))?;
        println!("{}: {} fundamental reports", path.display(), loaded.len());
        fundamentals.extend(loaded);
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    if !args.bars.is_empty() {
        let path = args.out.join("bars.csv");
        write_daily_bars(File::create(&path)?, &bars)?;
        println!("wrote {} ({} bars)", path.display(), bars.len());
    }
    if !args.news.is_empty() {
        let path = args.out.join("news.jsonl");
        write_news(File::create(&path)?, &news)?;
        println!("wrote {} ({} news items)", path.display(), news.len());
    }
    if !args.fundamentals.is_empty() {
        let path = args.out.join("fundamentals.jsonl");
        write_fundamentals(File::create(&path)?, &fundamentals)?;
        println!("wrote {} ({} fundamental reports)", path.display(), fundamentals.len());
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

/// Reads the data files named by the config into one dataset.
pub fn load_dataset(config: &RunConfig) -> Result<Dataset> {
    let bars = load_daily_bars(open(&config.data.bars)?)
        .with_context(|| format!("{}", config.data.bars.display()))?;
    let news = match &config.data.news {
        Some(path) => load_news(open(path)?).with_context(|| format!("{}", path.display()))?,
        None => Vec::new(),
    };
    let fundamentals = match &config.data.fundamentals {
        Some(path) => {
            load_fundamentals(open(path)?).with_context(|| format!("{}", path.display()))?
        }
        None => Vec::new(),
    };
    Ok(Dataset::new(bars, news, fundamentals))
}

pub fn cmd_backtest(args: &BacktestArgs) -> Result<()> {
    let mut config = RunConfig::from_toml_file(&args.config)?;
    if let Some(baseline) = args.baseline {
        config.run.mode = RunMode::Baseline(baseline);
    }
    if args.agents {
        config.run.mode = RunMode::Agents;
    }
    if let Some(cache_dir) = &args.replay {
        config.provider.cache_dir = Some(cache_dir.clone());
        config.provider.replay = true;
    }
    if let Some(out) = &args.out {
        config.output.dir = out.clone();
    }

    let dataset = load_dataset(&config)?;
    let mut runner = if args.resume {
        Runner::resume(&config, dataset, None)?
    } else {
        Runner::new(&config, dataset, None)?
    };

    println!(
        "mode {} | weeks {}..{} | {} remaining",
        config.run.mode.as_str(),
        runner.first_eval_week(),
        runner.calendar().len(),
        runner.remaining_weeks()
    );
    while let Some(summary) = runner.step()? {
        println!(
            "week {:>3} ({}): return {:+.4}% wealth {:.6} positions {}{}",
            summary.week,
            summary.eval_index,
            summary.portfolio_return * 100.0,
            summary.wealth,
            summary.positions,
            if summary.flags.is_empty() {
                String::new()
            } else {
                format!(" [{}]", summary.flags.join("; "))
            }
        );
    }

    let report = runner.write_outputs()?;
    let (json_path, csv_path) = (
        config.output.dir.join("report.json"),
        config.output.dir.join("equity.csv"),
    );
    if matches!(config.run.mode, RunMode::Agents) {
        println!("provider transport calls: {}", runner.transport_calls());
    }
    println!("wrote {}", json_path.display());
    println!("wrote {}", csv_path.display());
    println!("wrote {}", runner.ledger_path().display());
    println!();
    print_report(&config.run.mode, &report);
    Ok(())
}

fn print_report(mode: &RunMode, report: &RunReport) {
    let rows = vec![TableRow {
        name: mode.as_str().to_string(),
        weeks: report.metrics.weeks,
        metrics: Some(report.metrics.clone()),
    }];
    println!("{}", render_table(&rows));
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let mut rows = Vec::new();
    for path in &args.ledgers {
        let (header, weeks) = read_ledger(path)
            .with_context(|| format!("{}", path.display()))?;
        let name = path
            .parent()
            .and_then(Path::file_name)
            .map(|p| format!("{}/{}", p.to_string_lossy(), header.mode))
            .unwrap_or_else(|| header.mode.clone());
        if weeks.is_empty() {
            rows.push(TableRow {
                name,
                weeks: 0,
                metrics: None,
            });
        } else {
            let report = RunReport::from_weeks(&header.mode, &header.model, &weeks);
            rows.push(TableRow {
                name,
                weeks: report.metrics.weeks,
                metrics: Some(report.metrics),
            });
        }
    }
    println!("{}", render_table(&rows));
    Ok(())
}
