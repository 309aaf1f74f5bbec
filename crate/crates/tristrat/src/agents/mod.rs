//! The six agent roles (news, technical, fundamental, score, selector,
//! strategy) over a provider-agnostic chat-completion client.
//!
//! Provider misbehavior never escapes this module as an invalid portfolio:
//! selector output is validated against the hard constraints, re-prompted
//! once with the violation quoted, then deterministically repaired or
//! rejected.

pub mod client;
pub mod parse;
pub mod prompts;
pub mod provider;

pub use client::{cache_key, CallRecord, Completion, CompletionClient, ResponseCache, RetryPolicy};
pub use prompts::{PromptSet, PromptTemplate};
pub use provider::{
    CallTag, ChatRequest, ChatResponse, HttpProvider, Message, Provider, StubContent, StubEntry,
    StubProvider, StubScript,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backtest::ReturnVector;
use crate::history::{signed_pct, StrategyHistory};
use crate::market_data::StockId;
use crate::portfolio::Portfolio;

/// Environment variable holding the API credential for live runs.
pub const API_KEY_ENV: &str = "TRISTRAT_API_KEY";

/// Opening strategy used for week 1, before any outcomes exist. Volatility
/// risk scores higher-is-riskier, so the neutral prior inverts it.
pub const INITIAL_STRATEGY: &str = "Weigh all six dimensions equally; prefer high Financial \
    Health, Growth Potential, News Sentiment, News Impact, and Price Momentum; prefer low \
    Volatility Risk.";

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("chat request needs at least one message")]
    EmptyMessages,
    #[error("temperature {0} is outside [0, 2]")]
    InvalidTemperature(f64),
    #[error("{role} template: placeholder {{{placeholder}}} is unbound")]
    UnboundPlaceholder {
        role: &'static str,
        placeholder: String,
    },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("malformed provider payload: {0}")]
    MalformedPayload(String),
    #[error("provider returned an empty response")]
    EmptyResponse,
    #[error("no scripted stub response for role={role} stock={stock:?} week={week:?}")]
    NoScriptedResponse {
        role: String,
        stock: Option<String>,
        week: Option<u32>,
    },
    #[error("replay cache miss for key {0}")]
    ReplayCacheMiss(String),
    #[error("score response still invalid after corrective retry: {0}")]
    ScoreValidation(String),
    #[error("selector output rejected: {0}")]
    SelectorRejected(String),
    #[error("API key missing: set {API_KEY_ENV} or configure provider.api_key")]
    MissingApiKey,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl AgentError {
    /// Transport-level failures worth a retried attempt.
    pub fn is_retryable(&self) -> bool {
        matches!(self, AgentError::Transport(_) | AgentError::Timeout(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    News,
    #[serde(rename = "tech")]
    Technical,
    #[serde(rename = "fund")]
    Fundamental,
    Score,
    #[serde(rename = "select")]
    Selector,
    Strategy,
}

impl AgentRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentRole::News => "news",
            AgentRole::Technical => "tech",
            AgentRole::Fundamental => "fund",
            AgentRole::Score => "score",
            AgentRole::Selector => "select",
            AgentRole::Strategy => "strategy",
        }
    }
}

/// The three analysis flavors of the market-analysis stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisKind {
    News,
    Tech,
    Fund,
}

impl AnalysisKind {
    pub fn role(&self) -> AgentRole {
        match self {
            AnalysisKind::News => AgentRole::News,
            AnalysisKind::Tech => AgentRole::Technical,
            AnalysisKind::Fund => AgentRole::Fundamental,
        }
    }

    /// Placeholder name the input text binds to in the role's template.
    fn input_binding(&self) -> &'static str {
        match self {
            AnalysisKind::News => "news_text",
            AnalysisKind::Tech => "tech_text",
            AnalysisKind::Fund => "fund_text",
        }
    }
}

/// One analysis report (news, tech, or fund) for one stock-week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub stock: StockId,
    pub week: u32,
    pub kind: AnalysisKind,
    pub text: String,
}

/// Six 1-10 dimension scores plus rationale for one stock-week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub stock: StockId,
    pub week: u32,
    pub financial_health: u8,
    pub growth_potential: u8,
    pub news_sentiment: u8,
    pub news_impact: u8,
    pub price_momentum: u8,
    pub volatility_risk: u8,
    pub rationale: String,
}

impl ScoreReport {
    pub fn dimensions(&self) -> [(&'static str, u8); 6] {
        [
            ("financial_health", self.financial_health),
            ("growth_potential", self.growth_potential),
            ("news_sentiment", self.news_sentiment),
            ("news_impact", self.news_impact),
            ("price_momentum", self.price_momentum),
            ("volatility_risk", self.volatility_risk),
        ]
    }

    /// Canonical text form; this exact text is embedded in selector and
    /// strategy prompts.
    pub fn render(&self) -> String {
        let scores = self
            .dimensions()
            .iter()
            .map(|(name, v)| format!("{name}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        format!(
            "{} week {}: {}\n  rationale: {}",
            self.stock, self.week, scores, self.rationale
        )
    }
}

/// Natural-language selection strategy and the week it applies to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub week: u32,
    pub text: String,
}

impl Strategy {
    pub fn initial() -> Self {
        Strategy {
            week: 1,
            text: INITIAL_STRATEGY.to_string(),
        }
    }
}

/// Outcome of a selector call: the validated portfolio and, when the
/// deterministic repair had to run, a description of what was repaired.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectOutcome {
    pub portfolio: Portfolio,
    pub repaired: Option<String>,
}

/// Outcome of a refine call. When the provider fails or replies empty, the
/// current strategy carries forward and `carried_forward` explains why.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub strategy: Strategy,
    pub carried_forward: Option<String>,
}

/// Sampling and constraint settings shared by all agent calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSettings {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_positions: usize,
}

impl Default for AgentSettings {
    fn default() -> Self {
        AgentSettings {
            model: "stub-v1".to_string(),
            temperature: 0.0,
            max_tokens: 1024,
            max_positions: 5,
        }
    }
}

/// The six roles bound to one completion client and template set.
pub struct AgentSuite {
    client: CompletionClient,
    prompts: PromptSet,
    settings: AgentSettings,
}

impl AgentSuite {
    pub fn new(client: CompletionClient, prompts: PromptSet, settings: AgentSettings) -> Self {
        AgentSuite {
            client,
            prompts,
            settings,
        }
    }

    pub fn client(&self) -> &CompletionClient {
        &self.client
    }

    pub fn settings(&self) -> &AgentSettings {
        &self.settings
    }

    fn request(
        &self,
        role: AgentRole,
        stock: Option<&StockId>,
        week: Option<u32>,
        system: String,
        user: String,
    ) -> Result<ChatRequest, AgentError> {
        ChatRequest::new(
            self.settings.model.clone(),
            vec![Message::system(system), Message::user(user)],
            self.settings.temperature,
            self.settings.max_tokens,
            CallTag {
                role,
                stock: stock.map(|s| s.as_str().to_string()),
                week,
            },
        )
    }

    /// Runs one analysis agent on its serialized input text.
    pub fn analyze(
        &self,
        kind: AnalysisKind,
        input_text: &str,
        stock: &StockId,
        week: u32,
        calls: &mut Vec<CallRecord>,
    ) -> Result<AnalysisReport, AgentError> {
        let week_str = week.to_string();
        let (system, user) = self.prompts.for_role(kind.role()).render(&[
            ("symbol", stock.as_str()),
            ("week", &week_str),
            (kind.input_binding(), input_text),
        ])?;
        let request = self.request(kind.role(), Some(stock), Some(week), system, user)?;
        let completion = self.client.complete(&request)?;
        calls.push(completion.record);
        if completion.response.content.trim().is_empty() {
            return Err(AgentError::EmptyResponse);
        }
        Ok(AnalysisReport {
            stock: stock.clone(),
            week,
            kind,
            text: completion.response.content,
        })
    }

    /// Scores one stock from its data overview. An invalid reply triggers one
    /// corrective re-prompt quoting the violation, then a hard error.
    pub fn score(
        &self,
        overview: &crate::context::DataOverview,
        calls: &mut Vec<CallRecord>,
    ) -> Result<ScoreReport, AgentError> {
        let week_str = overview.week.to_string();
        let (system, user) = self.prompts.score.render(&[
            ("symbol", overview.stock.as_str()),
            ("week", &week_str),
            ("overview", &overview.text),
        ])?;
        let request = self.request(
            AgentRole::Score,
            Some(&overview.stock),
            Some(overview.week),
            system,
            user,
        )?;
        let completion = self.client.complete(&request)?;
        calls.push(completion.record);

        let first_error = match parse::parse_score(&completion.response.content) {
            Ok(values) => return Ok(self.score_report(overview, values)),
            Err(violation) => violation,
        };

        let retry = corrective_request(&request, &completion.response.content, &first_error,
            "Respond again with only a fenced JSON object containing the six integer scores \
             (each 1-10) and a rationale string.")?;
        let completion = self.client.complete(&retry)?;
        calls.push(completion.record);
        match parse::parse_score(&completion.response.content) {
            Ok(values) => Ok(self.score_report(overview, values)),
            Err(violation) => Err(AgentError::ScoreValidation(violation)),
        }
    }

    fn score_report(
        &self,
        overview: &crate::context::DataOverview,
        values: parse::ScoreValues,
    ) -> ScoreReport {
        let [fh, gp, ns, ni, pm, vr] = values.dimensions;
        ScoreReport {
            stock: overview.stock.clone(),
            week: overview.week,
            financial_health: fh,
            growth_potential: gp,
            news_sentiment: ns,
            news_impact: ni,
            price_momentum: pm,
            volatility_risk: vr,
            rationale: values.rationale,
        }
    }

    /// Builds the week's portfolio from all score reports under the current
    /// strategy. Constraint violations get one corrective re-prompt; if the
    /// reply is still invalid it is deterministically repaired (drop
    /// non-positive weights, keep the largest `max_positions`, rescale when
    /// the sum exceeds 1). Unknown tickers and unparseable replies are not
    /// repairable and error out.
    pub fn select(
        &self,
        scores: &[ScoreReport],
        strategy: &Strategy,
        tradable: &[StockId],
        week: u32,
        calls: &mut Vec<CallRecord>,
    ) -> Result<SelectOutcome, AgentError> {
        let scores_text = scores
            .iter()
            .map(ScoreReport::render)
            .collect::<Vec<_>>()
            .join("\n");
        let tradable_text = tradable
            .iter()
            .map(StockId::as_str)
            .collect::<Vec<_>>()
            .join(", ");
        let week_str = week.to_string();
        let max_positions = self.settings.max_positions.to_string();
        let (system, user) = self.prompts.select.render(&[
            ("week", &week_str),
            ("strategy", &strategy.text),
            ("scores", &scores_text),
            ("tradable", &tradable_text),
            ("max_positions", &max_positions),
        ])?;
        let request = self.request(AgentRole::Selector, None, Some(week), system, user)?;
        let completion = self.client.complete(&request)?;
        calls.push(completion.record);

        let violation = match self.try_portfolio(&completion.response.content, tradable, week) {
            Ok(portfolio) => {
                return Ok(SelectOutcome {
                    portfolio,
                    repaired: None,
                })
            }
            Err(violation) => violation,
        };

        let retry = corrective_request(&request, &completion.response.content, &violation,
            "Respond again with only a fenced JSON object mapping tradable tickers to weights \
             in [0, 1], at most the allowed number of positions, weights summing to at most 1.")?;
        let completion = self.client.complete(&retry)?;
        calls.push(completion.record);
        match self.try_portfolio(&completion.response.content, tradable, week) {
            Ok(portfolio) => Ok(SelectOutcome {
                portfolio,
                repaired: None,
            }),
            Err(second_violation) => {
                self.repair_portfolio(&completion.response.content, tradable, week, &second_violation)
            }
        }
    }

    /// Parses and validates a selector reply against the hard constraints.
    fn try_portfolio(
        &self,
        content: &str,
        tradable: &[StockId],
        week: u32,
    ) -> Result<Portfolio, String> {
        let raw = parse::parse_weights(content)?;
        let portfolio = portfolio_from_raw(week, &raw)?;
        portfolio
            .validate(tradable, self.settings.max_positions)
            .map_err(|e| e.to_string())?;
        Ok(portfolio)
    }

    /// Deterministic repair of a twice-rejected reply: keep finite positive
    /// weights on tradable tickers, take the `max_positions` largest, and
    /// scale by 1/sum when the sum exceeds 1.
    fn repair_portfolio(
        &self,
        content: &str,
        tradable: &[StockId],
        week: u32,
        violation: &str,
    ) -> Result<SelectOutcome, AgentError> {
        let raw = parse::parse_weights(content)
            .map_err(|e| AgentError::SelectorRejected(format!("{violation}; unparseable: {e}")))?;

        let mut kept: Vec<(StockId, f64)> = Vec::new();
        for (ticker, weight) in &raw {
            let stock = StockId::new(ticker)
                .ok()
                .filter(|s| tradable.contains(s))
                .ok_or_else(|| {
                    AgentError::SelectorRejected(format!(
                        "{violation}; unknown ticker {ticker:?} is not repairable"
                    ))
                })?;
            if weight.is_finite() && *weight > 0.0 {
                kept.push((stock, *weight));
            }
        }
        // Largest weights first; ties broken by ticker for determinism.
        kept.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        kept.truncate(self.settings.max_positions);
        let sum: f64 = kept.iter().map(|(_, w)| w).sum();
        if sum > 1.0 {
            for entry in &mut kept {
                entry.1 /= sum;
            }
        }
        let portfolio = Portfolio::from_stock_weights(week, kept.into_iter().collect());
        portfolio
            .validate(tradable, self.settings.max_positions)
            .map_err(|e| AgentError::SelectorRejected(format!("repair failed: {e}")))?;
        Ok(SelectOutcome {
            portfolio,
            repaired: Some(violation.to_string()),
        })
    }

    /// Refines the strategy from the week's realized outcomes. Provider
    /// failures and empty replies carry the current strategy forward.
    pub fn refine(
        &self,
        current: &Strategy,
        portfolio: &Portfolio,
        returns: &ReturnVector,
        scores: &[ScoreReport],
        history: &StrategyHistory,
        calls: &mut Vec<CallRecord>,
    ) -> RefineOutcome {
        let next_week = current.week + 1;
        let carry = |reason: String| RefineOutcome {
            strategy: Strategy {
                week: next_week,
                text: current.text.clone(),
            },
            carried_forward: Some(reason),
        };

        let week_str = current.week.to_string();
        let table = score_return_table(scores, returns);
        let history_text = history.render();
        let portfolio_text = render_portfolio(portfolio);
        let rendered = self.prompts.strategy.render(&[
            ("week", &week_str),
            ("strategy", &current.text),
            ("portfolio", &portfolio_text),
            ("score_return_table", &table),
            ("history", &history_text),
        ]);
        let (system, user) = match rendered {
            Ok(parts) => parts,
            Err(e) => return carry(e.to_string()),
        };
        let request =
            match self.request(AgentRole::Strategy, None, Some(current.week), system, user) {
                Ok(r) => r,
                Err(e) => return carry(e.to_string()),
            };
        match self.client.complete(&request) {
            Ok(completion) => {
                calls.push(completion.record);
                let text = completion.response.content.trim().to_string();
                if text.is_empty() {
                    carry("empty strategy response".to_string())
                } else {
                    RefineOutcome {
                        strategy: Strategy {
                            week: next_week,
                            text,
                        },
                        carried_forward: None,
                    }
                }
            }
            Err(e) => carry(e.to_string()),
        }
    }
}

/// Appends the rejected reply and a corrective instruction to the original
/// messages.
fn corrective_request(
    original: &ChatRequest,
    rejected_reply: &str,
    violation: &str,
    instruction: &str,
) -> Result<ChatRequest, AgentError> {
    let mut messages = original.messages.clone();
    messages.push(Message::assistant(rejected_reply));
    messages.push(Message::user(format!(
        "Your previous reply was invalid: {violation}. {instruction}"
    )));
    ChatRequest::new(
        original.model.clone(),
        messages,
        original.temperature,
        original.max_tokens,
        original.tag.clone(),
    )
}

/// Converts a raw ticker map into a portfolio, rejecting malformed symbols
/// and non-finite weights at the type boundary (range checks happen in
/// `Portfolio::validate`).
fn portfolio_from_raw(week: u32, raw: &BTreeMap<String, f64>) -> Result<Portfolio, String> {
    let mut weights = BTreeMap::new();
    for (ticker, &weight) in raw {
        let stock = StockId::new(ticker).map_err(|e| e.to_string())?;
        if !weight.is_finite() {
            return Err(format!("weight for {ticker:?} is not finite"));
        }
        weights.insert(stock, weight);
    }
    // Negative weights must fail validation rather than be silently dropped,
    // so keep them; from_stock_weights only drops exact zeros.
    Ok(Portfolio::from_stock_weights(week, weights))
}

/// One line per scored stock: realized return then the six scores.
pub fn score_return_table(scores: &[ScoreReport], returns: &ReturnVector) -> String {
    if scores.is_empty() {
        return "NO SCORED STOCKS".to_string();
    }
    let mut sorted: Vec<&ScoreReport> = scores.iter().collect();
    sorted.sort_by(|a, b| a.stock.cmp(&b.stock));
    sorted
        .iter()
        .map(|s| {
            let ret = returns
                .get(&s.stock)
                .map(signed_pct)
                .unwrap_or_else(|| "n/a".to_string());
            let dims = s
                .dimensions()
                .iter()
                .map(|(name, v)| format!("{name} {v}"))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{}: return {ret} | {dims}", s.stock)
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Human-readable weight listing for prompts and reports.
pub fn render_portfolio(portfolio: &Portfolio) -> String {
    if portfolio.is_all_cash() {
        return "all cash".to_string();
    }
    let positions = portfolio
        .weights()
        .iter()
        .map(|(stock, weight)| format!("{stock} {:.2}%", weight * 100.0))
        .collect::<Vec<_>>()
        .join(", ");
    format!("{positions}; cash {:.2}%", portfolio.cash_fraction() * 100.0)
}
