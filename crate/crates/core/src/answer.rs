//! Two-step answering: summarize pruned paths, then judge sufficiency; plus
//! the final generation fallback.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::analysis::{fold, Indicator};
use crate::error::{Error, Result};
use crate::explore::{dedup_paths, EntityPath, PathOrigin, PathStep};
use crate::llm::{LlmSession, Purpose};
use crate::prompts;
use crate::prune::{render_numbered, render_supernode, EntityStyle, QuestionContext};
use crate::subgraph::{QuestionSubgraph, SupernodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Sufficient,
    Insufficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceSource {
    KgOnly,
    LlmInspiredKg,
    KgInspiredLlm,
}

impl EvidenceSource {
    pub fn as_str(self) -> &'static str {
        match self {
            EvidenceSource::KgOnly => "kg_only",
            EvidenceSource::LlmInspiredKg => "llm_inspired_kg",
            EvidenceSource::KgInspiredLlm => "kg_inspired_llm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOutcome {
    pub verdict: Verdict,
    pub answer: Option<String>,
    pub reason: String,
    pub evidence_paths: Vec<EntityPath>,
    pub evidence_source: EvidenceSource,
}

impl AnswerOutcome {
    pub fn is_sufficient(&self) -> bool {
        self.verdict == Verdict::Sufficient
    }
}

pub(crate) fn brace_groups(text: &str) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    let mut offset = 0;
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let Some(close) = after.find('}') else { break };
        out.push((offset + open, after[..close].trim().to_owned()));
        let consumed = open + 1 + close + 1;
        offset += consumed;
        rest = &rest[consumed..];
    }
    out
}

fn is_verdict(s: &str) -> bool {
    matches!(s.to_lowercase().as_str(), "yes" | "no")
}

/// Brace group following the word "answer", else the first non-verdict brace
/// group, else the text of the answer line.
pub fn extract_answer(reply: &str) -> Option<String> {
    let groups = brace_groups(reply);
    let lower = reply.to_lowercase();
    if let Some(at) = lower.find("answer") {
        if let Some((_, g)) = groups.iter().find(|(pos, g)| *pos > at && !is_verdict(g) && !g.is_empty()) {
            return Some(g.clone());
        }
    }
    if let Some((_, g)) = groups.iter().find(|(_, g)| !is_verdict(g) && !g.is_empty()) {
        return Some(g.clone());
    }
    let line = reply
        .lines()
        .find(|l| l.to_lowercase().contains("answer"))
        .or_else(|| reply.lines().find(|l| !l.trim().is_empty()))?;
    let lower_line = line.to_lowercase();
    let tail = ["answer is", "answer:"]
        .iter()
        .find_map(|k| lower_line.find(k).map(|i| &line[i + k.len()..]))
        .unwrap_or(line);
    let cleaned = tail
        .replace("{Yes}", "")
        .replace("{No}", "")
        .trim()
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_owned();
    (!cleaned.is_empty()).then_some(cleaned)
}

fn related_paths_prompt(ctx: &QuestionContext<'_>, purpose: Purpose, paths: &[EntityPath], indicator: &Indicator) -> String {
    let related = render_numbered(ctx.graph, paths, ctx.prompt_render());
    let split = ctx.split_text();
    ctx.prompts.render(
        purpose,
        &[
            (prompts::QUERY, ctx.question),
            (prompts::THINK_INDICATOR, &indicator.raw),
            (prompts::SPLIT_QUESTION, &split),
            (prompts::RELATED_PATHS, &related),
        ],
    )
}

/// Lookup from rendered group text to the supernode it names.
fn node_lookup(graph: &QuestionSubgraph, paths: &[EntityPath]) -> HashMap<String, SupernodeId> {
    let mut map = HashMap::new();
    for p in paths {
        for n in p.nodes() {
            for style in [EntityStyle::IdAndLabel, EntityStyle::LabelOnly] {
                let text = render_supernode(graph, n, style);
                map.insert(fold(text.trim_matches(['{', '}'])), n);
            }
            for e in graph.members(n) {
                let label = graph.label(e.as_str());
                map.entry(fold(e.as_str())).or_insert(n);
                map.entry(fold(&format!("{e} {label}"))).or_insert(n);
                map.entry(fold(&label)).or_insert(n);
            }
        }
    }
    map
}

fn parse_relations(text: &str) -> BTreeSet<String> {
    text.trim()
        .trim_matches(['{', '}'])
        .split(',')
        .map(|r| r.trim().to_owned())
        .filter(|r| !r.is_empty())
        .collect()
}

/// `(from, relations, to)` of one rendered step; `None` when a node did not
/// resolve.
type ParsedStep = Option<(SupernodeId, BTreeSet<String>, SupernodeId)>;

/// One summary line as parsed steps, or `None` when the line is not a path
/// rendering.
fn parse_path_line(line: &str, lookup: &HashMap<String, SupernodeId>) -> Option<Vec<ParsedStep>> {
    if !line.contains("->") {
        return None;
    }
    let mut parts: Vec<&str> = line.split("->").map(str::trim).collect();
    if let Some(first) = parts.first_mut() {
        if let Some(i) = first.find('{') {
            *first = &first[i..];
        }
    }
    if parts.len() < 3 {
        return None;
    }
    let node = |s: &str| lookup.get(&fold(s.trim().trim_end_matches(['.', ',']).trim_matches(['{', '}']))).copied();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 2 < parts.len() {
        let step = match (node(parts[i]), node(parts[i + 2])) {
            (Some(a), Some(b)) => Some((a, parse_relations(parts[i + 1]), b)),
            _ => None,
        };
        out.push(step);
        i += 2;
    }
    Some(out)
}

fn match_input_step(
    input: &[(PathStep, &BTreeSet<String>, PathOrigin)],
    from: SupernodeId,
    rels: &BTreeSet<String>,
    to: SupernodeId,
) -> Option<(PathStep, PathOrigin)> {
    if rels.is_empty() {
        return None;
    }
    input.iter().find_map(|(s, have, origin)| {
        if !rels.is_subset(have) {
            return None;
        }
        if s.from == from && s.to == to {
            Some((*s, *origin))
        } else if s.from == to && s.to == from {
            Some((s.reversed(), *origin))
        } else {
            None
        }
    })
}

fn run_to_path(graph: &QuestionSubgraph, run: Vec<PathStep>, origin: PathOrigin, inputs: &[EntityPath]) -> EntityPath {
    if let Some(p) = inputs.iter().find(|p| p.steps == run) {
        return p.clone();
    }
    let mut nodes = vec![run[0].from];
    nodes.extend(run.iter().map(|s| s.to));
    let mut anchors = Vec::new();
    let mut positions = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        if graph.is_topic(*n) && !anchors.contains(n) {
            anchors.push(*n);
            positions.push(i);
        }
    }
    if positions.first() != Some(&0) {
        anchors.insert(0, nodes[0]);
        positions.insert(0, 0);
    }
    EntityPath {
        anchors,
        anchor_positions: positions,
        steps: run,
        origin,
    }
}

/// Summarize `paths` with the model and keep only the parts of the summary
/// that retrace input steps. Falls back to the input when nothing survives.
pub fn summarize_paths(
    ctx: &QuestionContext<'_>,
    paths: &[EntityPath],
    indicator: &Indicator,
    llm: &mut LlmSession,
) -> Result<Vec<EntityPath>> {
    if paths.is_empty() {
        return Err(Error::Precondition("nothing to summarize".into()));
    }
    let prompt = related_paths_prompt(ctx, Purpose::Summarize, paths, indicator);
    let lookup = node_lookup(ctx.graph, paths);
    let input: Vec<(PathStep, &BTreeSet<String>, PathOrigin)> = paths
        .iter()
        .flat_map(|p| p.steps.iter().map(move |s| (*s, s.relations(ctx.graph), p.origin)))
        .collect();
    for attempt in 0..2 {
        let reply = llm.complete(Purpose::Summarize, prompt.clone())?;
        let lines: Vec<_> = reply.lines().filter_map(|l| parse_path_line(l, &lookup)).collect();
        if lines.is_empty() {
            if attempt == 0 {
                llm.note("summary contained no path lines, retrying");
            }
            continue;
        }
        let mut out = Vec::new();
        let mut dropped = 0;
        for line in lines {
            let mut run: Vec<PathStep> = Vec::new();
            let mut run_origin = PathOrigin::Topic;
            for step in line {
                let matched = step.and_then(|(a, rels, b)| match_input_step(&input, a, &rels, b));
                match matched {
                    Some((s, origin)) if run.last().is_none_or(|last| last.to == s.from) => {
                        if run.is_empty() {
                            run_origin = origin;
                        }
                        run.push(s);
                    }
                    _ => {
                        dropped += 1;
                        if !run.is_empty() {
                            out.push(run_to_path(ctx.graph, std::mem::take(&mut run), run_origin, paths));
                        }
                    }
                }
            }
            if !run.is_empty() {
                out.push(run_to_path(ctx.graph, run, run_origin, paths));
            }
        }
        if dropped > 0 {
            llm.note(format!("summary: dropped {dropped} step(s) not present in the input paths"));
        }
        if out.is_empty() {
            llm.note("summary retained no valid step; using input paths");
            return Ok(paths.to_vec());
        }
        return Ok(dedup_paths(out));
    }
    llm.note("summary unparseable; using input paths");
    Ok(paths.to_vec())
}

/// Where the answer came from, judged by the evidence paths it appears on.
pub fn classify_evidence(graph: &QuestionSubgraph, answer: Option<&str>, paths: &[EntityPath]) -> EvidenceSource {
    let Some(answer) = answer else {
        return EvidenceSource::KgInspiredLlm;
    };
    let wanted: Vec<String> = answer
        .split([',', ';'])
        .flat_map(|s| s.split(" and "))
        .map(fold)
        .filter(|s| !s.is_empty())
        .collect();
    let whole = fold(answer);
    let on_path = |p: &EntityPath, text: &str| {
        p.nodes().iter().any(|n| {
            graph
                .members(*n)
                .iter()
                .any(|e| fold(&graph.label(e.as_str())) == text || fold(e.as_str()) == text)
        })
    };
    let carriers: Vec<&EntityPath> = paths
        .iter()
        .filter(|p| on_path(p, &whole) || (!wanted.is_empty() && wanted.iter().all(|w| on_path(p, w))))
        .collect();
    if carriers.is_empty() {
        EvidenceSource::KgInspiredLlm
    } else if carriers.iter().any(|p| p.origin == PathOrigin::Supplement) {
        EvidenceSource::LlmInspiredKg
    } else {
        EvidenceSource::KgOnly
    }
}

/// Judge whether `paths` answer the question; gated on the literal `{Yes}`.
pub fn evaluate_sufficiency(
    ctx: &QuestionContext<'_>,
    paths: &[EntityPath],
    indicator: &Indicator,
    llm: &mut LlmSession,
) -> Result<AnswerOutcome> {
    if paths.is_empty() {
        return Err(Error::Precondition("nothing to evaluate".into()));
    }
    let prompt = related_paths_prompt(ctx, Purpose::Evaluate, paths, indicator);
    let mut last = String::new();
    for attempt in 0..2 {
        let reply = llm.complete(Purpose::Evaluate, prompt.clone())?;
        if reply.contains("{Yes}") {
            let answer = extract_answer(&reply);
            let evidence_source = classify_evidence(ctx.graph, answer.as_deref(), paths);
            return Ok(AnswerOutcome {
                verdict: Verdict::Sufficient,
                answer,
                reason: reply,
                evidence_paths: paths.to_vec(),
                evidence_source,
            });
        }
        if reply.contains("{No}") {
            return Ok(AnswerOutcome {
                verdict: Verdict::Insufficient,
                answer: None,
                reason: reply,
                evidence_paths: paths.to_vec(),
                evidence_source: EvidenceSource::KgOnly,
            });
        }
        if attempt == 0 {
            llm.note("evaluation reply had neither {Yes} nor {No}, retrying");
        }
        last = reply;
    }
    llm.note("evaluation verdict missing; treating as insufficient");
    Ok(AnswerOutcome {
        verdict: Verdict::Insufficient,
        answer: None,
        reason: last,
        evidence_paths: paths.to_vec(),
        evidence_source: EvidenceSource::KgOnly,
    })
}

/// Summarize then evaluate. Returns `None` without calling the model when
/// there are no paths.
pub fn question_answering(
    ctx: &QuestionContext<'_>,
    paths: &[EntityPath],
    indicator: &Indicator,
    llm: &mut LlmSession,
) -> Result<Option<AnswerOutcome>> {
    if paths.is_empty() {
        return Ok(None);
    }
    let summary = summarize_paths(ctx, paths, indicator, llm)?;
    let mut outcome = evaluate_sufficiency(ctx, &summary, indicator, llm)?;
    if outcome.is_sufficient() {
        outcome.evidence_source = classify_evidence(ctx.graph, outcome.answer.as_deref(), &summary);
    }
    Ok(Some(outcome))
}

/// Answer from the paths plus the model's own knowledge. Always yields an
/// answer string.
pub fn generate_final_answer(
    ctx: &QuestionContext<'_>,
    paths: &[EntityPath],
    indicator: &Indicator,
    llm: &mut LlmSession,
) -> Result<AnswerOutcome> {
    let prompt = related_paths_prompt(ctx, Purpose::Generate, paths, indicator);
    let reply = llm.complete(Purpose::Generate, prompt)?;
    let answer = extract_answer(&reply).unwrap_or_else(|| reply.trim().to_owned());
    let evidence_source = classify_evidence(ctx.graph, Some(&answer), paths);
    Ok(AnswerOutcome {
        verdict: Verdict::Insufficient,
        answer: Some(answer),
        reason: reply,
        evidence_paths: paths.to_vec(),
        evidence_source,
    })
}
