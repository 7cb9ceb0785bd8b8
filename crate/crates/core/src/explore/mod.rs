//! Three-phase exploration: topic paths, model-supplemented paths and 1-hop
//! node expansion, with the final generation fallback.

mod find;
mod path;

pub use find::{entity_path_find, find_paths, reorder, segment_paths, LengthBucket};
pub use path::{dedup_paths, sort_paths, EntityPath, PathOrigin, PathStep};

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::analysis::{field_value, fold, parse_indicator, render_topics, Indicator, QuestionAnalysis, TopicLabel};
use crate::answer::{brace_groups, generate_final_answer, question_answering, AnswerOutcome};
use crate::config::PogConfig;
use crate::embed::rank_by_cosine;
use crate::error::Result;
use crate::kg::{Direction, EntityId, KgSource};
use crate::llm::{LlmSession, Purpose};
use crate::prompts;
use crate::prune::{apply_strategy, fuzzy_select, render_numbered, PruneReport, QuestionContext};
use crate::subgraph::{QuestionSubgraph, SupernodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Topic,
    Supplement,
    Expand,
    Final,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Topic => "topic",
            Phase::Supplement => "supplement",
            Phase::Expand => "expand",
            Phase::Final => "final",
        }
    }
}

/// One iteration of one phase, as recorded in the trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: Phase,
    pub depth: usize,
    pub candidates: usize,
    pub prune_stages: Vec<usize>,
    pub llm_calls: usize,
    pub sufficient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedEntity {
    pub text: String,
    pub aligned: Option<EntityId>,
    pub indicator: Indicator,
}

/// Result of a phase: an answer, or the paths it leaves for the next phase.
#[derive(Debug, Clone)]
pub struct PhaseOutcome {
    pub answer: Option<AnswerOutcome>,
    pub paths: Vec<EntityPath>,
    pub depth: usize,
}

/// Per-question exploration state shared by the phases.
pub struct Explorer<'a> {
    pub ctx: QuestionContext<'a>,
    pub analysis: &'a QuestionAnalysis,
    pub topics: &'a [TopicLabel],
    pub config: &'a PogConfig,
    pub records: Vec<PhaseRecord>,
    pub predictions: Vec<PredictedEntity>,
}

impl<'a> Explorer<'a> {
    pub fn new(
        ctx: QuestionContext<'a>,
        analysis: &'a QuestionAnalysis,
        topics: &'a [TopicLabel],
        config: &'a PogConfig,
    ) -> Self {
        Self {
            ctx,
            analysis,
            topics,
            config,
            records: Vec::new(),
            predictions: Vec::new(),
        }
    }

    fn prune(&self, ctx: &QuestionContext<'_>, paths: &[EntityPath], indicator: &Indicator, llm: &mut LlmSession) -> Result<PruneReport> {
        apply_strategy(
            ctx,
            self.config.strategy,
            self.config.widths,
            self.config.d_max,
            paths,
            indicator,
            llm,
        )
    }

    /// Prune, answer and record one iteration.
    fn step(
        &mut self,
        ctx: &QuestionContext<'_>,
        phase: Phase,
        depth: usize,
        candidates: &[EntityPath],
        llm: &mut LlmSession,
    ) -> Result<(Vec<EntityPath>, Option<AnswerOutcome>)> {
        let before = llm.transcript().call_count();
        let indicator = &self.analysis.indicator;
        let report = if candidates.is_empty() {
            PruneReport {
                paths: Vec::new(),
                stages: vec![0],
            }
        } else {
            self.prune(ctx, candidates, indicator, llm)?
        };
        let outcome = question_answering(ctx, &report.paths, indicator, llm)?;
        let sufficient = outcome.as_ref().is_some_and(AnswerOutcome::is_sufficient);
        self.records.push(PhaseRecord {
            phase,
            depth,
            candidates: candidates.len(),
            prune_stages: report.stages,
            llm_calls: llm.transcript().call_count() - before,
            sufficient,
        });
        Ok((report.paths, outcome.filter(AnswerOutcome::is_sufficient)))
    }

    /// Entity paths through the topics at increasing depth, starting from the
    /// predicted depth.
    pub fn run_topic_phase(&mut self, list_t: &[SupernodeId], llm: &mut LlmSession) -> Result<PhaseOutcome> {
        llm.set_stage(Phase::Topic.as_str());
        let d_max = self.config.d_max;
        let start = self.analysis.d_predict.clamp(1, d_max);
        let ctx = self.ctx;
        let mut kept = Vec::new();
        for d in start..=d_max {
            let candidates = entity_path_find(ctx.graph, list_t, d);
            let (pruned, answer) = self.step(&ctx, Phase::Topic, d, &candidates, llm)?;
            if answer.is_some() {
                return Ok(PhaseOutcome { answer, paths: pruned, depth: d });
            }
            if !pruned.is_empty() {
                kept = pruned;
            }
        }
        Ok(PhaseOutcome {
            answer: None,
            paths: kept,
            depth: d_max,
        })
    }

    fn align_prediction(&self, text: &str, llm: &mut LlmSession) -> Result<Option<(EntityId, SupernodeId)>> {
        let graph = self.ctx.graph;
        let candidates: Vec<(EntityId, String)> = graph
            .entity_labels()
            .into_iter()
            .filter(|(e, _)| graph.supernode_of(e).is_some_and(|s| !graph.is_topic(s)))
            .collect();
        if candidates.is_empty() {
            return Ok(None);
        }
        let target = fold(text);
        let exact = candidates
            .iter()
            .find(|(e, l)| fold(l) == target || fold(e.as_str()) == target);
        if let Some((e, _)) = exact {
            return Ok(graph.supernode_of(e).map(|s| (e.clone(), s)));
        }
        let query = self.ctx.embedder.embed_one(text)?;
        let labels: Vec<String> = candidates.iter().map(|(_, l)| l.clone()).collect();
        let vectors = self.ctx.embedder.embed(&labels)?;
        let best = rank_by_cosine(&query, &vectors)?.into_iter().next();
        match best {
            Some((i, score)) if score >= self.config.align_threshold => {
                let e = &candidates[i].0;
                Ok(graph.supernode_of(e).map(|s| (e.clone(), s)))
            }
            Some((i, score)) => {
                llm.note(format!(
                    "prediction {text:?} dropped: best match {:?} scored {score:.3}",
                    candidates[i].1
                ));
                Ok(None)
            }
            None => Ok(None),
        }
    }

    /// Paths through the topics plus one model-predicted bridge entity.
    pub fn run_supplement_phase(
        &mut self,
        list_t: &[SupernodeId],
        paths_t: &[EntityPath],
        llm: &mut LlmSession,
    ) -> Result<PhaseOutcome> {
        llm.set_stage(Phase::Supplement.as_str());
        let ctx = self.ctx;
        let d_max = self.config.d_max;
        let topic_text = render_topics(self.topics);
        let split = ctx.split_text();
        let related = render_numbered(ctx.graph, paths_t, ctx.prompt_render());
        let prompt = ctx.prompts.render(
            Purpose::Supplement,
            &[
                (prompts::QUERY, ctx.question),
                (prompts::TOPIC_ENTITY, &topic_text),
                (prompts::THINK_INDICATOR, &self.analysis.indicator.raw),
                (prompts::SPLIT_QUESTION, &split),
                (prompts::RELATED_PATHS, &related),
            ],
        );
        let before = llm.transcript().call_count();
        let reply = llm.complete(Purpose::Supplement, prompt)?;
        let raw = parse_predictions(&reply, self.config.max_predictions);
        if raw.is_empty() {
            llm.note("supplement reply contained no predictions");
        }

        let mut union = Vec::new();
        for (text, indicator_text) in raw {
            let indicator = parse_indicator(indicator_text.as_deref().unwrap_or(&text), self.topics, Some(&text));
            let aligned = self.align_prediction(&text, llm)?;
            self.predictions.push(PredictedEntity {
                text: text.clone(),
                aligned: aligned.as_ref().map(|(e, _)| e.clone()),
                indicator: indicator.clone(),
            });
            let Some((_, node)) = aligned else { continue };
            let anchors = supplement_anchors(self.topics, list_t, node, &indicator, ctx.graph);
            let bucket = LengthBucket::supplement(list_t.len(), d_max);
            let found = find_paths(ctx.graph, &anchors, bucket, PathOrigin::Supplement);
            if found.is_empty() {
                continue;
            }
            union.extend(fuzzy_select(&ctx, &found, &indicator, self.config.widths.w_max)?);
        }
        let union = dedup_paths(union);
        if union.is_empty() {
            self.records.push(PhaseRecord {
                phase: Phase::Supplement,
                depth: d_max,
                candidates: 0,
                prune_stages: vec![0],
                llm_calls: llm.transcript().call_count() - before,
                sufficient: false,
            });
            return Ok(PhaseOutcome {
                answer: None,
                paths: Vec::new(),
                depth: d_max,
            });
        }
        let (pruned, answer) = self.step(&ctx, Phase::Supplement, d_max, &union, llm)?;
        if let Some(last) = self.records.last_mut() {
            last.llm_calls += 1;
        }
        Ok(PhaseOutcome {
            answer,
            paths: pruned,
            depth: d_max,
        })
    }

    /// Grow the current paths one hop at a time from the source graph.
    /// Returns the outcome and the enlarged subgraph the paths refer to.
    pub fn run_expand_phase(
        &mut self,
        source: &dyn KgSource,
        paths_t: &[EntityPath],
        paths_s: &[EntityPath],
        llm: &mut LlmSession,
    ) -> Result<(PhaseOutcome, QuestionSubgraph)> {
        llm.set_stage(Phase::Expand.as_str());
        let mut graph = self.ctx.graph.clone();
        let seed = dedup_paths(paths_t.iter().chain(paths_s).cloned());
        let mut paths_e = if seed.is_empty() {
            Vec::new()
        } else {
            let ctx = self.ctx.with_graph(&graph);
            self.prune(&ctx, &seed, &self.analysis.indicator, llm)?.paths
        };
        let mut visited: HashSet<SupernodeId> = HashSet::new();
        let mut fetched: HashMap<EntityId, Vec<crate::kg::NeighborRecord>> = HashMap::new();
        for d in 1..=self.config.d_max {
            let mut extended = paths_e.clone();
            let mut terminals: Vec<SupernodeId> = Vec::new();
            for p in &paths_e {
                for n in [p.first_node(), p.last_node()].into_iter().flatten() {
                    if !visited.contains(&n) && !terminals.contains(&n) {
                        terminals.push(n);
                    }
                }
            }
            for &node in &terminals {
                visited.insert(node);
                let shared = shared_neighbors(&graph, node, source, &mut fetched)?;
                let ids: Vec<&str> = shared.iter().map(|(_, n, _)| n.as_str()).collect();
                let names = source.labels(&ids)?;
                let labels: HashMap<String, String> = ids
                    .iter()
                    .zip(names)
                    .map(|(id, name)| (id.to_string(), name))
                    .collect();
                for (relation, neighbor, direction) in &shared {
                    let Some((edge, other, dir)) = graph.attach(node, relation, neighbor, *direction, &labels) else {
                        continue;
                    };
                    for p in &paths_e {
                        if p.nodes().contains(&other) {
                            continue;
                        }
                        let step = PathStep {
                            from: node,
                            edge,
                            to: other,
                            direction: dir,
                        };
                        if p.last_node() == Some(node) {
                            let mut q = p.clone();
                            q.steps.push(step);
                            q.origin = PathOrigin::Expand;
                            extended.push(q);
                        }
                        if p.first_node() == Some(node) && !p.steps.is_empty() {
                            let mut q = p.clone();
                            q.steps.insert(0, step.reversed());
                            q.anchor_positions.iter_mut().for_each(|i| *i += 1);
                            q.origin = PathOrigin::Expand;
                            extended.push(q);
                        }
                    }
                }
            }
            let candidates = dedup_paths(extended);
            let ctx = self.ctx.with_graph(&graph);
            let (pruned, answer) = self.step(&ctx, Phase::Expand, d, &candidates, llm)?;
            if answer.is_some() {
                return Ok((PhaseOutcome { answer, paths: pruned, depth: d }, graph));
            }
            paths_e = pruned;
        }
        Ok((
            PhaseOutcome {
                answer: None,
                paths: paths_e,
                depth: self.config.d_max,
            },
            graph,
        ))
    }

    /// Prune every path gathered so far and answer from paths plus model
    /// knowledge.
    pub fn run_final(
        &mut self,
        graph: &QuestionSubgraph,
        paths_t: &[EntityPath],
        paths_s: &[EntityPath],
        paths_e: &[EntityPath],
        llm: &mut LlmSession,
    ) -> Result<AnswerOutcome> {
        llm.set_stage(Phase::Final.as_str());
        llm.note("final fallback uses the last pruned expand-phase paths");
        let before = llm.transcript().call_count();
        let ctx = self.ctx.with_graph(graph);
        let all = dedup_paths(paths_t.iter().chain(paths_s).chain(paths_e).cloned());
        let report = if all.is_empty() {
            PruneReport {
                paths: Vec::new(),
                stages: vec![0],
            }
        } else {
            self.prune(&ctx, &all, &self.analysis.indicator, llm)?
        };
        let outcome = generate_final_answer(&ctx, &report.paths, &self.analysis.indicator, llm)?;
        self.records.push(PhaseRecord {
            phase: Phase::Final,
            depth: self.config.d_max,
            candidates: all.len(),
            prune_stages: report.stages,
            llm_calls: llm.transcript().call_count() - before,
            sufficient: false,
        });
        Ok(outcome)
    }
}

/// `(relation, neighbor, direction)` triples that every member of `node`
/// has in the source graph.
fn shared_neighbors(
    graph: &QuestionSubgraph,
    node: SupernodeId,
    source: &dyn KgSource,
    fetched: &mut HashMap<EntityId, Vec<crate::kg::NeighborRecord>>,
) -> Result<Vec<(String, EntityId, Direction)>> {
    let members = graph.members(node).clone();
    let mut counts: BTreeMap<(String, EntityId, Direction), usize> = BTreeMap::new();
    for m in &members {
        if !fetched.contains_key(m) {
            let n = source.neighbors(m)?;
            fetched.insert(m.clone(), n);
        }
        let mut seen = HashSet::new();
        for rec in &fetched[m] {
            let key = (rec.relation.clone(), rec.neighbor.clone(), rec.direction);
            if seen.insert(key.clone()) {
                *counts.entry(key).or_default() += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .filter(|(_, c)| *c == members.len())
        .map(|(k, _)| k)
        .collect())
}

fn supplement_anchors(
    topics: &[TopicLabel],
    list_t: &[SupernodeId],
    predicted: SupernodeId,
    indicator: &Indicator,
    graph: &QuestionSubgraph,
) -> Vec<SupernodeId> {
    let mut keyed: Vec<(Option<usize>, usize, SupernodeId)> = list_t
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pos = graph
                .topics()
                .iter()
                .filter(|(_, t)| t == s)
                .find_map(|(e, _)| topics.iter().find(|t| &t.entity == e).and_then(|t| indicator.position_of(&t.entity)));
            (pos, i, *s)
        })
        .collect();
    keyed.push((indicator.predicted_position(), list_t.len(), predicted));
    keyed.sort_by_key(|(pos, i, _)| (pos.is_none(), pos.unwrap_or(0), *i));
    keyed.into_iter().map(|(_, _, s)| s).collect()
}

const PREDICTION_LABELS: [&str; 4] = ["predicted result", "predicted answer", "prediction", "result"];
const SUP_INDICATOR_LABELS: [&str; 5] = ["indicator", "llm indicator", "think indicator", "chain of thought", "cot"];

/// `(prediction, indicator text)` pairs from a supplement reply.
pub fn parse_predictions(reply: &str, limit: usize) -> Vec<(String, Option<String>)> {
    let mut out: Vec<(String, Option<String>)> = Vec::new();
    for line in reply.lines() {
        if let Some(v) = field_value(line, &PREDICTION_LABELS) {
            let text = brace_groups(v)
                .into_iter()
                .map(|(_, g)| g)
                .next()
                .unwrap_or_else(|| v.trim_matches(|c: char| c == '"' || c.is_whitespace()).to_owned());
            if !text.is_empty() {
                out.push((text, None));
            }
        } else if let Some(v) = field_value(line, &SUP_INDICATOR_LABELS) {
            if let Some(slot) = out.iter_mut().rev().find(|(_, i)| i.is_none()) {
                slot.1 = Some(v.to_owned());
            }
        }
    }
    out.truncate(limit);
    out
}
