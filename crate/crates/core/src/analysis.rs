//! Question decomposition and the thinking-indicator chain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::EntityId;
use crate::llm::{LlmSession, Purpose};
use crate::prompts::{self, PromptLibrary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum IndicatorToken {
    Topic(EntityId),
    /// Bridge entity proposed by the model during the supplement phase.
    Predicted(String),
    Answer,
    Hint(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicator {
    pub chain: Vec<IndicatorToken>,
    pub raw: String,
}

impl Indicator {
    /// Position of the first mention of `entity`, if any.
    pub fn position_of(&self, entity: &EntityId) -> Option<usize> {
        self.chain
            .iter()
            .position(|t| matches!(t, IndicatorToken::Topic(e) if e == entity))
    }

    pub fn predicted_position(&self) -> Option<usize> {
        self.chain.iter().position(|t| matches!(t, IndicatorToken::Predicted(_)))
    }

    pub fn has_answer_slot(&self) -> bool {
        self.chain.contains(&IndicatorToken::Answer)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionAnalysis {
    pub split_questions: Vec<String>,
    pub indicator: Indicator,
    pub d_predict: usize,
}

/// Topic entity as seen by the parser: id plus surface label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub entity: EntityId,
    pub label: String,
}

impl TopicLabel {
    pub fn new(entity: impl Into<EntityId>, label: impl Into<String>) -> Self {
        Self {
            entity: entity.into(),
            label: label.into(),
        }
    }
}

const QUESTION_WORDS: [&str; 12] = [
    "what", "when", "where", "who", "whom", "whose", "which", "how", "how many", "how much", "why", "answer",
];

pub(crate) fn fold(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn strip_quotes(s: &str) -> &str {
    s.trim()
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '\u{201c}' | '\u{201d}' | '\u{2018}' | '\u{2019}'))
        .trim()
}

/// Split on en/em dashes everywhere and on `-` unless it joins two
/// alphanumerics, as in `Jean-Baptiste`.
pub fn split_chain(raw: &str) -> Vec<String> {
    let chars: Vec<char> = raw.chars().collect();
    let mut pieces = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let sep = match c {
            '\u{2013}' | '\u{2014}' => true,
            '-' => {
                let prev = i.checked_sub(1).map(|j| chars[j]);
                let next = chars.get(i + 1).copied();
                !(prev.is_some_and(char::is_alphanumeric) && next.is_some_and(char::is_alphanumeric))
            }
            _ => false,
        };
        if sep {
            pieces.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    pieces.push(cur);
    pieces
        .into_iter()
        .map(|p| p.trim().to_owned())
        .filter(|p| !p.is_empty())
        .collect()
}

/// Parse an indicator chain, recognising topics by case-insensitive label
/// containment. Later mentions of an already-seen topic become hints.
pub fn parse_indicator(raw: &str, topics: &[TopicLabel], predicted: Option<&str>) -> Indicator {
    let mut chain = Vec::new();
    let mut seen: Vec<&EntityId> = Vec::new();
    let mut explicit_answer = false;
    let pieces = split_chain(raw);
    for piece in &pieces {
        let lower = fold(piece);
        let mut body = strip_quotes(piece).to_owned();
        let mut wrapped = false;
        if lower.starts_with("answer(") && lower.ends_with(')') {
            wrapped = true;
            body = strip_quotes(&piece.trim()["answer(".len()..piece.trim().len() - 1]).to_owned();
        }
        let mut marked = false;
        if let Some(i) = fold(&body).find("(answer)") {
            marked = true;
            body = strip_quotes(&body[..i]).to_owned();
        }
        let folded = fold(&body);
        let topic = topics
            .iter()
            .filter(|t| !t.label.trim().is_empty() && folded.contains(&fold(&t.label)))
            .max_by_key(|t| t.label.len())
            .filter(|t| !seen.contains(&&t.entity));
        let is_predicted = predicted.is_some_and(|p| !p.trim().is_empty() && folded.contains(&fold(p)));
        if wrapped || marked {
            explicit_answer = true;
            chain.push(IndicatorToken::Answer);
        }
        if let Some(t) = topic {
            seen.push(&t.entity);
            chain.push(IndicatorToken::Topic(t.entity.clone()));
        } else if is_predicted {
            chain.push(IndicatorToken::Predicted(body));
        } else if !(wrapped || marked) && !folded.is_empty() {
            chain.push(IndicatorToken::Hint(body));
        }
    }
    if !explicit_answer {
        if let Some(IndicatorToken::Hint(h)) = chain.last() {
            if QUESTION_WORDS.contains(&fold(strip_quotes(h)).trim_end_matches('?')) {
                chain.pop();
                chain.push(IndicatorToken::Answer);
            }
        }
    }
    Indicator {
        chain,
        raw: raw.trim().to_owned(),
    }
}

/// Largest number of hints between any topic and its nearest answer slot,
/// floored at 1. A chain without an answer slot yields `(1, Some(warning))`.
pub fn derive_predicted_depth(indicator: &Indicator) -> (usize, Option<String>) {
    let answers: Vec<usize> = indicator
        .chain
        .iter()
        .enumerate()
        .filter(|(_, t)| **t == IndicatorToken::Answer)
        .map(|(i, _)| i)
        .collect();
    if answers.is_empty() {
        return (1, Some(format!("indicator has no answer slot: {}", indicator.raw)));
    }
    let hints_between = |a: usize, b: usize| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        indicator.chain[lo + 1..hi]
            .iter()
            .filter(|t| matches!(t, IndicatorToken::Hint(_)))
            .count()
    };
    let depth = indicator
        .chain
        .iter()
        .enumerate()
        .filter(|(_, t)| matches!(t, IndicatorToken::Topic(_)))
        .map(|(i, _)| answers.iter().map(|&a| hints_between(i, a)).min().unwrap_or(0))
        .max()
        .unwrap_or(1);
    (depth.max(1), None)
}

/// Value after a `label:` prefix, matched case-insensitively, ignoring list
/// bullets.
pub(crate) fn field_value<'a>(line: &'a str, labels: &[&str]) -> Option<&'a str> {
    let trimmed = line.trim().trim_start_matches(['-', '*', '#', ' ']).trim_start();
    let lower = trimmed.to_lowercase();
    for label in labels {
        if let Some(rest) = lower.strip_prefix(label) {
            let rest_start = trimmed.len() - rest.len();
            let after = trimmed[rest_start..].trim_start();
            let after = after.trim_start_matches(|c: char| c.is_ascii_digit() || c == ' ');
            if let Some(v) = after.strip_prefix(':') {
                return Some(v.trim());
            }
        }
    }
    None
}

const INDICATOR_LABELS: [&str; 6] = [
    "llm indicator",
    "think indicator",
    "thinking indicator",
    "indicator",
    "cot",
    "chain of thought",
];
const SPLIT_LABELS: [&str; 3] = ["split_question", "split question", "sub-question"];

fn parse_analysis(reply: &str, topics: &[TopicLabel]) -> Option<(Vec<String>, Indicator)> {
    let mut split = Vec::new();
    let mut indicator = None;
    for line in reply.lines() {
        if let Some(v) = field_value(line, &SPLIT_LABELS) {
            if !v.is_empty() {
                split.push(v.to_owned());
            }
        } else if indicator.is_none() {
            if let Some(v) = field_value(line, &INDICATOR_LABELS) {
                if !v.is_empty() {
                    indicator = Some(parse_indicator(v, topics, None));
                }
            }
        }
    }
    let indicator = indicator?;
    if split.is_empty() || indicator.chain.len() < 2 {
        return None;
    }
    Some((split, indicator))
}

pub fn render_topics(topics: &[TopicLabel]) -> String {
    let quoted: Vec<String> = topics.iter().map(|t| format!("\"{}\"", t.label)).collect();
    format!("[{}]", quoted.join(", "))
}

pub fn render_split_questions(split: &[String]) -> String {
    split
        .iter()
        .enumerate()
        .map(|(i, q)| format!("split_question {}: {q}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Decompose `question` and derive `D_predict` with one model call, retrying
/// once on an unparseable reply.
pub fn analyze_question(
    question: &str,
    topics: &[TopicLabel],
    prompts: &PromptLibrary,
    llm: &mut LlmSession,
) -> Result<QuestionAnalysis> {
    if topics.is_empty() {
        return Err(Error::Precondition("question analysis needs at least one topic entity".into()));
    }
    let topic_text = render_topics(topics);
    let prompt = prompts.render(
        Purpose::Analysis,
        &[(prompts::QUERY, question), (prompts::TOPIC_ENTITY, &topic_text)],
    );
    let mut last = String::new();
    for attempt in 0..2 {
        let reply = llm.complete(Purpose::Analysis, prompt.clone())?;
        if let Some((split_questions, indicator)) = parse_analysis(&reply, topics) {
            let (d_predict, warning) = derive_predicted_depth(&indicator);
            if let Some(w) = warning {
                llm.note(w);
            }
            for t in topics {
                if indicator.position_of(&t.entity).is_none() {
                    llm.note(format!("topic {} not mentioned in indicator", t.label));
                }
            }
            return Ok(QuestionAnalysis {
                split_questions,
                indicator,
                d_predict,
            });
        }
        if attempt == 0 {
            llm.note("analysis reply unparseable, retrying");
        }
        last = reply;
    }
    Err(Error::Analysis { raw: last })
}
