//! Prompt templates for the six agent roles.
//!
//! A template is a system text plus a user-text skeleton with `{name}`
//! placeholders. Rendering fails on any unbound placeholder. Placeholders are
//! bare lowercase identifiers in braces, so JSON braces inside template text
//! or bound data never collide with them.

use serde::{Deserialize, Serialize};

use super::{AgentError, AgentRole};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub role: AgentRole,
    pub system: String,
    pub user: String,
}

impl PromptTemplate {
    /// Renders (system, user), substituting every `{name}` placeholder.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<(String, String), AgentError> {
        let user = render_text(&self.user, bindings, self.role)?;
        let system = render_text(&self.system, bindings, self.role)?;
        Ok((system, user))
    }
}

fn render_text(
    template: &str,
    bindings: &[(&str, &str)],
    role: AgentRole,
) -> Result<String, AgentError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match placeholder_name(after) {
            Some(name) => {
                let value = bindings
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| AgentError::UnboundPlaceholder {
                        role: role.as_str(),
                        placeholder: name.to_string(),
                    })?;
                out.push_str(value);
                rest = &after[name.len() + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// A placeholder is `{lowercase_identifier}`; anything else (JSON braces,
/// digits-first, quotes) is literal text.
fn placeholder_name(after_open: &str) -> Option<&str> {
    let close = after_open.find('}')?;
    let name = &after_open[..close];
    let valid = !name.is_empty()
        && name.chars().next().unwrap().is_ascii_lowercase()
        && name.chars().all(|c| c.is_ascii_lowercase() || c == '_');
    valid.then_some(name)
}

/// The full template set, one per role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSet {
    pub news: PromptTemplate,
    pub tech: PromptTemplate,
    pub fund: PromptTemplate,
    pub score: PromptTemplate,
    pub select: PromptTemplate,
    pub strategy: PromptTemplate,
}

impl PromptSet {
    pub fn for_role(&self, role: AgentRole) -> &PromptTemplate {
        match role {
            AgentRole::News => &self.news,
            AgentRole::Technical => &self.tech,
            AgentRole::Fundamental => &self.fund,
            AgentRole::Score => &self.score,
            AgentRole::Selector => &self.select,
            AgentRole::Strategy => &self.strategy,
        }
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            news: PromptTemplate {
                role: AgentRole::News,
                system: "You are an equity news analyst. You assess how recent coverage \
                         changes a stock's near-term outlook."
                    .to_string(),
                user: "Stock: {symbol}\nDecision week: {week}\n\nNews from the preceding \
                       calendar week, one item per line:\n{news_text}\n\nWrite a concise \
                       analysis report covering overall sentiment, concrete catalysts, and \
                       how broad and lasting the impact is likely to be. If there was no \
                       news, state that and assess what the absence of coverage implies."
                    .to_string(),
            },
            tech: PromptTemplate {
                role: AgentRole::Technical,
                system: "You are an equity technical analyst. You read daily price and \
                         indicator series and describe the state of the trend."
                    .to_string(),
                user: "Stock: {symbol}\nDecision week: {week}\n\nDaily closes and technical \
                       indicators over the preceding four trading weeks, one line per \
                       trading day:\n{tech_text}\n\nWrite a concise analysis report covering \
                       trend direction, momentum, volatility, and any notable indicator \
                       signals (moving-average position, RSI extremes, MACD crossovers, \
                       band touches)."
                    .to_string(),
            },
            fund: PromptTemplate {
                role: AgentRole::Fundamental,
                system: "You are an equity fundamental analyst. You evaluate financial \
                         stability and growth from quarterly statements."
                    .to_string(),
                user: "Stock: {symbol}\nDecision week: {week}\n\nMost recent quarterly \
                       reports released before this week, oldest first:\n{fund_text}\n\n\
                       Write a concise analysis report covering financial health, earnings \
                       trajectory, and growth capacity. If no reports are available, state \
                       that and note the added uncertainty."
                    .to_string(),
            },
            score: PromptTemplate {
                role: AgentRole::Score,
                system: "You are an equity scoring agent. You condense an analyst overview \
                         into six dimension scores, each an integer from 1 (weakest) to 10 \
                         (strongest). For volatility_risk a higher score means MORE \
                         volatile and riskier."
                    .to_string(),
                user: "Stock: {symbol}\nDecision week: {week}\n\nAnalyst overview:\n\
                       {overview}\n\nScore the six dimensions: financial_health (current \
                       financial stability), growth_potential (future expansion capacity), \
                       news_sentiment (polarity of recent coverage), news_impact (breadth \
                       and duration of news influence), price_momentum (strength and \
                       consistency of the recent uptrend), volatility_risk (level of recent \
                       price fluctuation; higher = riskier).\n\nRespond with a fenced JSON \
                       object and nothing else, in exactly this form:\n```json\n\
                       {\"financial_health\": 5, \"growth_potential\": 5, \"news_sentiment\": 5, \
                       \"news_impact\": 5, \"price_momentum\": 5, \"volatility_risk\": 5, \
                       \"rationale\": \"one short paragraph\"}\n```\nEvery score must be an \
                       integer between 1 and 10."
                    .to_string(),
            },
            select: PromptTemplate {
                role: AgentRole::Selector,
                system: "You are a portfolio selector. You allocate capital across at most \
                         a handful of stocks for a one-week holding period; unallocated \
                         capital stays in cash."
                    .to_string(),
                user: "Decision week: {week}\n\nSelection strategy in force:\n{strategy}\n\n\
                       Scoring reports for every candidate stock:\n{scores}\n\nTradable \
                       tickers this week: {tradable}\n\nPick at most {max_positions} tickers \
                       and assign each a weight in [0, 1]; the weights must sum to at most \
                       1. Prefer stocks whose scores match the strategy. Holding cash is \
                       allowed: an empty object means fully in cash.\n\nRespond with a \
                       fenced JSON object mapping ticker to weight and nothing else, for \
                       example:\n```json\n{\"AAA\": 0.3, \"BBB\": 0.2}\n```"
                    .to_string(),
            },
            strategy: PromptTemplate {
                role: AgentRole::Strategy,
                system: "You are a strategy analyst. You refine a natural-language stock \
                         selection strategy by comparing what was predicted (scores) with \
                         what happened (returns)."
                    .to_string(),
                user: "Completed week: {week}\n\nStrategy that was in force:\n\
                       {strategy}\n\nPortfolio held:\n{portfolio}\n\nRealized weekly return \
                       and scores per candidate stock:\n{score_return_table}\n\nTrajectory \
                       of recent strategies and their outcomes:\n{history}\n\nIdentify \
                       which score dimensions separated the winners from the losers this \
                       week, keep what has been working across the trajectory, and state \
                       the refined strategy for next week. Respond with the strategy text \
                       only."
                    .to_string(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_substitutes_all_placeholders() {
        let set = PromptSet::default();
        let (system, user) = set
            .news
            .render(&[("symbol", "AAPL"), ("week", "5"), ("news_text", "NO NEWS THIS WEEK")])
            .unwrap();
        assert!(system.contains("news analyst"));
        assert!(user.contains("Stock: AAPL"));
        assert!(user.contains("NO NEWS THIS WEEK"));
        assert!(!user.contains('{'));
    }

    #[test]
    fn render_fails_on_unbound_placeholder() {
        let set = PromptSet::default();
        let err = set.news.render(&[("symbol", "AAPL")]).unwrap_err();
        match err {
            AgentError::UnboundPlaceholder { placeholder, .. } => {
                assert_eq!(placeholder, "week");
            }
            other => panic!("expected UnboundPlaceholder, got {other}"),
        }
    }

    #[test]
    fn json_braces_in_templates_and_data_are_literal() {
        let template = PromptTemplate {
            role: AgentRole::Score,
            system: String::new(),
            user: "data: {overview}\nreply like {\"a\": 1}".to_string(),
        };
        let (_, user) = template
            .render(&[("overview", "body with {\"weights\": {\"AAA\": 0.2}}")])
            .unwrap();
        assert!(user.contains("{\"weights\": {\"AAA\": 0.2}}"));
        assert!(user.contains("{\"a\": 1}"));
    }

    #[test]
    fn score_template_renders_with_json_schema_intact() {
        let set = PromptSet::default();
        let (_, user) = set
            .score
            .render(&[("symbol", "AAPL"), ("week", "5"), ("overview", "o")])
            .unwrap();
        assert!(user.contains("\"financial_health\": 5"));
        assert!(user.contains("\"volatility_risk\": 5"));
    }

    #[test]
    fn input_text_appears_exactly_once() {
        let set = PromptSet::default();
        let marker = "UNIQUE-INPUT-MARKER-77";
        let (_, user) = set
            .tech
            .render(&[("symbol", "AAPL"), ("week", "5"), ("tech_text", marker)])
            .unwrap();
        assert_eq!(user.matches(marker).count(), 1);
    }
}
