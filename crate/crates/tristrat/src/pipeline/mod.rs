//! The weekly loop: analysis, scoring, selection, settlement, and strategy
//! refinement, with every prompt, response, and outcome appended to the run
//! ledger.
//!
//! Weeks run strictly sequentially (the strategy state depends on prior
//! weeks); per-stock agent calls inside a week fan out on a bounded thread
//! pool and join in ticker order so ledgers are deterministic.

mod config;
mod ledger;
mod report;

pub use config::{
    ConfigError, DataConfig, OutputConfig, ProviderConfig, ProviderKind, RunConfig, RunMode,
    RunSettings,
};
pub use ledger::{
    read_ledger, LedgerCall, LedgerError, LedgerHeader, LedgerWriter, WeekRecord,
    LEDGER_SCHEMA_VERSION,
};
pub use report::{render_table, RunReport, TableRow, WeeklyRow, REPORT_SCHEMA_VERSION};

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::agents::{
    AgentError, AgentSuite, AnalysisKind, CallRecord, PromptSet, Provider, ScoreReport, Strategy,
    INITIAL_STRATEGY,
};
use crate::backtest::{run_settlement, tradable_universe, BacktestError, CostModel, EquityCurve};
use crate::baselines::{equal_weight, factor_score, top5_portfolio, Baseline, BaselineError, FactorKind};
use crate::context::{build_overview, ContextError, ContextParams, StockWeekContext};
use crate::history::{HistoryError, StrategyHistory, StrategyRecord};
use crate::indicators::{indicator_table, IndicatorError, IndicatorRow};
use crate::market_data::{DataError, Dataset, StockId, TradingCalendar};
use crate::portfolio::Portfolio;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Indicator(#[from] IndicatorError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Backtest(#[from] BacktestError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

/// Mutable run state; fully reconstructible from the ledger.
#[derive(Debug)]
pub struct RunState {
    /// Calendar index of the next week to evaluate.
    pub next_week: u32,
    /// Evaluated weeks completed so far.
    pub eval_count: usize,
    /// Strategy in force for `next_week` (unused in baseline mode).
    pub strategy: Strategy,
    pub history: StrategyHistory,
    pub equity: EquityCurve,
    pub returns: Vec<f64>,
}

/// What `step` hands back for progress display.
#[derive(Debug, Clone, PartialEq)]
pub struct WeekSummary {
    pub week: u32,
    pub eval_index: usize,
    pub positions: usize,
    pub portfolio_return: f64,
    pub wealth: f64,
    pub flags: Vec<String>,
}

/// Drives one backtest over one dataset, one week per `step`.
pub struct Runner {
    mode: RunMode,
    model: String,
    universe: Vec<StockId>,
    data: Dataset,
    calendar: TradingCalendar,
    tables: BTreeMap<StockId, Vec<IndicatorRow>>,
    context_params: ContextParams,
    costs: CostModel,
    agents: Option<AgentSuite>,
    pool: rayon::ThreadPool,
    first_eval_week: u32,
    output_dir: PathBuf,
    ledger: LedgerWriter,
    state: RunState,
}

struct Prepared {
    mode: RunMode,
    model: String,
    universe: Vec<StockId>,
    calendar: TradingCalendar,
    tables: BTreeMap<StockId, Vec<IndicatorRow>>,
    context_params: ContextParams,
    costs: CostModel,
    agents: Option<AgentSuite>,
    pool: rayon::ThreadPool,
    first_eval_week: u32,
    output_dir: PathBuf,
    header: LedgerHeader,
    history_capacity: usize,
}

impl Runner {
    /// Starts a fresh run, truncating any previous ledger in the output
    /// directory. Configuration and data inconsistencies fail here, before
    /// week one.
    pub fn new(
        config: &RunConfig,
        data: Dataset,
        override_provider: Option<Arc<dyn Provider>>,
    ) -> Result<Self, PipelineError> {
        let p = prepare(config, &data, override_provider)?;
        let ledger = LedgerWriter::create(&p.output_dir.join("ledger.jsonl"), &p.header)?;
        let state = RunState {
            next_week: p.first_eval_week,
            eval_count: 0,
            strategy: Strategy {
                week: p.first_eval_week,
                text: INITIAL_STRATEGY.to_string(),
            },
            history: StrategyHistory::new(p.history_capacity),
            equity: EquityCurve::new(),
            returns: Vec::new(),
        };
        Ok(Self::assemble(p, data, ledger, state))
    }

    /// Resumes from the ledger in the output directory, verifying that it
    /// belongs to this configuration, then continues where it stopped.
    pub fn resume(
        config: &RunConfig,
        data: Dataset,
        override_provider: Option<Arc<dyn Provider>>,
    ) -> Result<Self, PipelineError> {
        let p = prepare(config, &data, override_provider)?;
        let path = p.output_dir.join("ledger.jsonl");
        let (header, weeks) = read_ledger(&path)?;
        if header != p.header {
            return Err(LedgerError::Mismatch {
                path,
                message: "header differs from the current configuration".to_string(),
            }
            .into());
        }

        let mut state = RunState {
            next_week: p.first_eval_week,
            eval_count: weeks.len(),
            strategy: Strategy {
                week: p.first_eval_week,
                text: INITIAL_STRATEGY.to_string(),
            },
            history: StrategyHistory::new(p.history_capacity),
            equity: EquityCurve::new(),
            returns: Vec::new(),
        };
        for record in &weeks {
            state.returns.push(record.portfolio_return);
            state.equity.push_return(record.portfolio_return);
            if (state.equity.latest() - record.wealth).abs() > 1e-12 {
                return Err(LedgerError::Mismatch {
                    path,
                    message: format!(
                        "week {}: wealth {} does not reproduce recorded {}",
                        record.week,
                        state.equity.latest(),
                        record.wealth
                    ),
                }
                .into());
            }
            if matches!(p.mode, RunMode::Agents) {
                state.history.append(StrategyRecord {
                    week: record.week,
                    strategy_text: record.strategy.clone(),
                    universe_avg_return: record.universe_avg_return,
                    portfolio_return: record.portfolio_return,
                })?;
            }
        }
        if let Some(last) = weeks.last() {
            state.next_week = last.week + 1;
            state.strategy = Strategy {
                week: last.week + 1,
                text: last.next_strategy.clone(),
            };
        }
        let ledger = LedgerWriter::append_to(&path)?;
        Ok(Self::assemble(p, data, ledger, state))
    }

    fn assemble(p: Prepared, data: Dataset, ledger: LedgerWriter, state: RunState) -> Self {
        Runner {
            mode: p.mode,
            model: p.model,
            universe: p.universe,
            data,
            calendar: p.calendar,
            tables: p.tables,
            context_params: p.context_params,
            costs: p.costs,
            agents: p.agents,
            pool: p.pool,
            first_eval_week: p.first_eval_week,
            output_dir: p.output_dir,
            ledger,
            state,
        }
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn first_eval_week(&self) -> u32 {
        self.first_eval_week
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.output_dir.join("ledger.jsonl")
    }

    /// Transport calls issued so far (agent mode; 0 for baselines).
    pub fn transport_calls(&self) -> u64 {
        self.agents
            .as_ref()
            .map(|a| a.client().transport_calls())
            .unwrap_or(0)
    }

    /// Evaluated weeks left to run.
    pub fn remaining_weeks(&self) -> usize {
        (self.calendar.len() as u32 + 1).saturating_sub(self.state.next_week) as usize
    }

    /// Runs one week end to end; `None` once the calendar is exhausted.
    pub fn step(&mut self) -> Result<Option<WeekSummary>, PipelineError> {
        let t = self.state.next_week;
        if t as usize > self.calendar.len() {
            return Ok(None);
        }
        let week = self.calendar.week(t)?.clone();
        let (tradable, excluded) = tradable_universe(&self.universe, &week, &self.data);
        let mut flags: Vec<String> = Vec::new();
        let mut calls: Vec<CallRecord> = Vec::new();

        let (portfolio, scores) = match self.mode {
            RunMode::Agents => self.agent_week(t, &tradable, &mut calls, &mut flags)?,
            RunMode::Baseline(baseline) => {
                (self.baseline_week(baseline, t, &tradable)?, Vec::new())
            }
        };

        let (result, return_vector) =
            run_settlement(&week, &portfolio, &self.universe, &self.data, &self.costs)?;

        let strategy_text = self.state.strategy.text.clone();
        let next_strategy = match self.mode {
            RunMode::Agents => {
                self.state.history.append(StrategyRecord {
                    week: t,
                    strategy_text: strategy_text.clone(),
                    universe_avg_return: result.universe_avg_return,
                    portfolio_return: result.portfolio_return,
                })?;
                let agents = self.agents.as_ref().expect("agent mode has a suite");
                let outcome = agents.refine(
                    &self.state.strategy,
                    &portfolio,
                    &return_vector,
                    &scores,
                    &self.state.history,
                    &mut calls,
                );
                if let Some(reason) = outcome.carried_forward {
                    flags.push(format!("strategy_carried_forward: {reason}"));
                }
                outcome.strategy
            }
            RunMode::Baseline(_) => Strategy {
                week: t + 1,
                text: String::new(),
            },
        };

        self.state.equity.push_return(result.portfolio_return);
        self.state.returns.push(result.portfolio_return);
        self.state.eval_count += 1;

        let record = WeekRecord {
            week: t,
            eval_index: self.state.eval_count,
            first_day: week.first_day(),
            last_day: week.last_day(),
            strategy: match self.mode {
                RunMode::Agents => strategy_text,
                RunMode::Baseline(_) => String::new(),
            },
            tradable: tradable.iter().map(|s| s.as_str().to_string()).collect(),
            excluded: excluded.iter().map(|s| s.as_str().to_string()).collect(),
            portfolio: portfolio
                .weights()
                .iter()
                .map(|(s, w)| (s.as_str().to_string(), *w))
                .collect(),
            stock_returns: return_vector
                .returns
                .iter()
                .map(|(s, r)| (s.as_str().to_string(), *r))
                .collect(),
            portfolio_return: result.portfolio_return,
            universe_avg_return: result.universe_avg_return,
            cash_fraction: result.cash_fraction,
            wealth: self.state.equity.latest(),
            next_strategy: next_strategy.text.clone(),
            flags: flags.clone(),
            calls: calls.iter().map(LedgerCall::from).collect(),
        };
        self.ledger.append_week(&record)?;

        self.state.strategy = next_strategy;
        self.state.next_week = t + 1;

        Ok(Some(WeekSummary {
            week: t,
            eval_index: self.state.eval_count,
            positions: portfolio.positions(),
            portfolio_return: result.portfolio_return,
            wealth: self.state.equity.latest(),
            flags,
        }))
    }

    /// Runs every remaining week.
    pub fn run(&mut self) -> Result<usize, PipelineError> {
        let mut completed = 0;
        while self.step()?.is_some() {
            completed += 1;
        }
        Ok(completed)
    }

    /// Builds the report from the ledger (the source of truth).
    pub fn report(&self) -> Result<RunReport, PipelineError> {
        let (_, weeks) = read_ledger(&self.ledger_path())?;
        Ok(RunReport::from_weeks(self.mode.as_str(), &self.model, &weeks))
    }

    /// Writes `report.json` and `equity.csv` next to the ledger.
    pub fn write_outputs(&self) -> Result<RunReport, PipelineError> {
        let report = self.report()?;
        report.write_files(&self.output_dir)?;
        Ok(report)
    }

    /// Builds contexts, runs the three analyses and the scorer per tradable
    /// stock (fanned out, joined in ticker order), then the selector. Any
    /// unrecoverable agent error degrades the week to all-cash and the run
    /// continues.
    fn agent_week(
        &self,
        t: u32,
        tradable: &[StockId],
        calls: &mut Vec<CallRecord>,
        flags: &mut Vec<String>,
    ) -> Result<(Portfolio, Vec<ScoreReport>), PipelineError> {
        if tradable.is_empty() {
            flags.push("week_degraded_all_cash: no tradable stocks".to_string());
            return Ok((Portfolio::all_cash(t), Vec::new()));
        }
        let agents = self.agents.as_ref().expect("agent mode has a suite");

        type StockOutcome = Result<(ScoreReport, Vec<CallRecord>), (String, Vec<CallRecord>)>;
        let outcomes: Vec<StockOutcome> = self.pool.install(|| {
            tradable
                .par_iter()
                .map(|stock| {
                    let mut stock_calls = Vec::new();
                    match self.score_stock(agents, stock, t, &mut stock_calls) {
                        Ok(score) => Ok((score, stock_calls)),
                        Err(e) => Err((format!("{stock}: {e}"), stock_calls)),
                    }
                })
                .collect()
        });

        let mut scores = Vec::new();
        let mut first_failure: Option<String> = None;
        for outcome in outcomes {
            match outcome {
                Ok((score, stock_calls)) => {
                    calls.extend(stock_calls);
                    scores.push(score);
                }
                Err((error, stock_calls)) => {
                    calls.extend(stock_calls);
                    first_failure.get_or_insert(error);
                }
            }
        }
        if let Some(error) = first_failure {
            flags.push(format!("week_degraded_all_cash: {error}"));
            return Ok((Portfolio::all_cash(t), scores));
        }

        match agents.select(&scores, &self.state.strategy, tradable, t, calls) {
            Ok(outcome) => {
                if let Some(violation) = outcome.repaired {
                    flags.push(format!("selector_repaired: {violation}"));
                }
                Ok((outcome.portfolio, scores))
            }
            Err(error) => {
                flags.push(format!("week_degraded_all_cash: {error}"));
                Ok((Portfolio::all_cash(t), scores))
            }
        }
    }

    fn score_stock(
        &self,
        agents: &AgentSuite,
        stock: &StockId,
        t: u32,
        calls: &mut Vec<CallRecord>,
    ) -> Result<ScoreReport, PipelineError> {
        let rows = self.tables.get(stock).map(Vec::as_slice).unwrap_or(&[]);
        let context = StockWeekContext::build(
            stock,
            t,
            &self.calendar,
            rows,
            self.data.news_for(stock),
            self.data.fundamentals_for(stock),
            &self.context_params,
        )?;
        let alpha_news =
            agents.analyze(AnalysisKind::News, &context.news_text, stock, t, calls)?;
        let alpha_tech =
            agents.analyze(AnalysisKind::Tech, &context.tech_text, stock, t, calls)?;
        let alpha_fund =
            agents.analyze(AnalysisKind::Fund, &context.fund_text, stock, t, calls)?;
        let overview =
            build_overview(stock, t, &alpha_news.text, &alpha_tech.text, &alpha_fund.text);
        Ok(agents.score(&overview, calls)?)
    }

    /// Baseline selection shares the calendar, settlement, and metrics paths
    /// with the agent loop; only portfolio construction differs. Factor
    /// scores are evaluated at the last trading day of week t-1; stocks with
    /// warmed-up indicators only are ranked.
    fn baseline_week(
        &self,
        baseline: Baseline,
        t: u32,
        tradable: &[StockId],
    ) -> Result<Portfolio, PipelineError> {
        if tradable.is_empty() {
            return Ok(Portfolio::all_cash(t));
        }
        let portfolio = match baseline {
            Baseline::EqualWeight => equal_weight(t, tradable)?,
            Baseline::Sma | Baseline::Macd | Baseline::Boll => {
                let kind = match baseline {
                    Baseline::Sma => FactorKind::Sma,
                    Baseline::Macd => FactorKind::Macd,
                    _ => FactorKind::Boll,
                };
                let eval_day = self.calendar.week(t - 1)?.last_day();
                let mut factors = BTreeMap::new();
                for stock in tradable {
                    let row = self
                        .tables
                        .get(stock)
                        .and_then(|rows| rows.iter().find(|r| r.date == eval_day));
                    if let Some(value) = row.and_then(|r| factor_score(kind, r)) {
                        factors.insert(stock.clone(), value);
                    }
                }
                top5_portfolio(t, &factors)
            }
        };
        Ok(portfolio)
    }
}

fn prepare(
    config: &RunConfig,
    data: &Dataset,
    override_provider: Option<Arc<dyn Provider>>,
) -> Result<Prepared, PipelineError> {
    config.validate()?;
    let universe = config.load_universe()?;

    let range = config.range();
    let universe_bars: Vec<crate::market_data::DailyBar> = universe
        .iter()
        .flat_map(|stock| data.bars_for(stock))
        .filter(|bar| range.contains(bar.date))
        .cloned()
        .collect();
    let calendar = TradingCalendar::build(&universe_bars, range)?;

    let first_eval_week = config.context.lookback_weeks + 1;
    if (calendar.len() as u32) < first_eval_week {
        return Err(PipelineError::InsufficientData(format!(
            "{} trading weeks in range but the {}-week lookback needs at least {}",
            calendar.len(),
            config.context.lookback_weeks,
            first_eval_week
        )));
    }

    let mut tables = BTreeMap::new();
    for stock in &universe {
        let bars: Vec<crate::market_data::DailyBar> =
            data.bars_for(stock).into_iter().cloned().collect();
        tables.insert(stock.clone(), indicator_table(&bars, &config.indicators)?);
    }

    let agents = match config.run.mode {
        RunMode::Agents => {
            let client = config.build_client(override_provider)?;
            Some(AgentSuite::new(
                client,
                PromptSet::default(),
                config.agent_settings(),
            ))
        }
        RunMode::Baseline(_) => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.provider.concurrency.max(1))
        .build()
        .expect("thread pool builds");

    let header = LedgerHeader {
        schema_version: LEDGER_SCHEMA_VERSION,
        mode: config.run.mode.as_str().to_string(),
        model: config.provider.model.clone(),
        start: config.data.start,
        end: config.data.end,
        universe: universe.iter().map(|s| s.as_str().to_string()).collect(),
        history_capacity: config.run.history_capacity,
        max_positions: config.run.max_positions,
        lookback_weeks: config.context.lookback_weeks,
        transaction_cost_bps: config.run.transaction_cost_bps,
        initial_strategy: INITIAL_STRATEGY.to_string(),
    };

    Ok(Prepared {
        mode: config.run.mode,
        model: config.provider.model.clone(),
        universe,
        calendar,
        tables,
        context_params: config.context.clone(),
        costs: CostModel {
            transaction_cost_bps: config.run.transaction_cost_bps,
        },
        agents,
        pool,
        first_eval_week,
        output_dir: config.output.dir.clone(),
        header,
        history_capacity: config.run.history_capacity,
    })
}
