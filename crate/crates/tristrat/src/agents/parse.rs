//! Structured-output extraction from free-form model replies.
//!
//! Preference order: JSON inside a fenced code block, then the first balanced
//! JSON object anywhere in the text.

use std::collections::BTreeMap;

use serde_json::Value;

/// Extracts the first JSON object from a model reply.
pub fn extract_json_object(text: &str) -> Result<Value, String> {
    for block in fenced_blocks(text) {
        if let Some(value) = first_object_in(block) {
            return Ok(value);
        }
    }
    first_object_in(text).ok_or_else(|| "no JSON object found in response".to_string())
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after_fence = &rest[open + 3..];
        // Skip the info string (e.g. "json") up to the end of the line.
        let body_start = after_fence.find('\n').map(|i| i + 1).unwrap_or(0);
        let body = &after_fence[body_start..];
        match body.find("```") {
            Some(close) => {
                blocks.push(&body[..close]);
                rest = &body[close + 3..];
            }
            None => break,
        }
    }
    blocks
}

/// Finds the first balanced `{...}` region that parses as a JSON object,
/// trying up to 64 candidate start positions so stray braces in prose do not
/// mask a later valid object.
fn first_object_in(text: &str) -> Option<Value> {
    let starts = text
        .bytes()
        .enumerate()
        .filter(|(_, b)| *b == b'{')
        .map(|(i, _)| i)
        .take(64);
    for start in starts {
        if let Some(end) = balanced_close(&text.as_bytes()[start..]) {
            let candidate = &text[start..start + end + 1];
            if let Ok(value @ Value::Object(_)) = serde_json::from_str(candidate) {
                return Some(value);
            }
        }
    }
    None
}

/// Index of the `}` that balances the `{` at byte 0, string-aware.
fn balanced_close(bytes: &[u8]) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

pub const SCORE_DIMENSIONS: [&str; 6] = [
    "financial_health",
    "growth_potential",
    "news_sentiment",
    "news_impact",
    "price_momentum",
    "volatility_risk",
];

/// Parsed and range-checked six-dimension scores plus rationale.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreValues {
    pub dimensions: [u8; 6],
    pub rationale: String,
}

/// Parses a score reply: all six dimensions present, each an integer in
/// 1..=10. The error text quotes the violation for the corrective re-prompt.
pub fn parse_score(text: &str) -> Result<ScoreValues, String> {
    let object = extract_json_object(text)?;
    let map = object.as_object().expect("extract yields an object");
    let mut dimensions = [0u8; 6];
    for (i, name) in SCORE_DIMENSIONS.iter().enumerate() {
        let value = map
            .get(*name)
            .ok_or_else(|| format!("missing dimension {name:?}"))?;
        let number = value
            .as_i64()
            .ok_or_else(|| format!("{name} is {value}, not an integer"))?;
        if !(1..=10).contains(&number) {
            return Err(format!("{name} is {number}, outside 1..=10"));
        }
        dimensions[i] = number as u8;
    }
    let rationale = map
        .get("rationale")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string();
    Ok(ScoreValues {
        dimensions,
        rationale,
    })
}

/// Parses a selector reply into a raw ticker -> weight map. Values must be
/// JSON numbers; an empty object is a valid all-cash portfolio.
pub fn parse_weights(text: &str) -> Result<BTreeMap<String, f64>, String> {
    let object = extract_json_object(text)?;
    let map = object.as_object().expect("extract yields an object");
    let mut weights = BTreeMap::new();
    for (ticker, value) in map {
        let weight = value
            .as_f64()
            .ok_or_else(|| format!("weight for {ticker:?} is {value}, not a number"))?;
        weights.insert(ticker.clone(), weight);
    }
    Ok(weights)
}
