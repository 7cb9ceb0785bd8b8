//! Dataset IO, per-question orchestration, Hits@1 and run metrics.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_question, fold, QuestionAnalysis, TopicLabel};
use crate::answer::{AnswerOutcome, EvidenceSource};
use crate::config::PogConfig;
use crate::embed::Embedder;
use crate::error::{Error, Result};
use crate::explore::{reorder, Explorer, Phase, PhaseRecord, PredictedEntity};
use crate::kg::{EntityId, KgSource};
use crate::linker::{align_to_kg, extract_topic_keywords, EntityIndex, TopicEntity};
use crate::llm::{CallRecord, LlmBackend, LlmSession};
use crate::prompts::PromptLibrary;
use crate::prune::{render_path, QuestionContext, RenderOptions};
use crate::subgraph::{build_question_subgraph, cluster_supernodes, reduce_by_topic_paths};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldTopic {
    pub label: String,
    pub id: EntityId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_entities: Option<Vec<GoldTopic>>,
}

/// Parse a JSON-lines dataset. Blank lines are skipped.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<QuestionRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    let mut ids = HashSet::new();
    let err = |line: usize, message: String| Error::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: QuestionRecord = serde_json::from_str(line).map_err(|e| err(n + 1, e.to_string()))?;
        if record.answers.iter().all(|a| a.trim().is_empty()) {
            return Err(err(n + 1, "record has no gold answers".into()));
        }
        if record.question.trim().is_empty() {
            return Err(err(n + 1, "record has an empty question".into()));
        }
        if !ids.insert(record.id.clone()) {
            return Err(err(n + 1, format!("duplicate id {:?}", record.id)));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn save_dataset(path: impl AsRef<Path>, records: &[QuestionRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn hits_at_1(predicted: &str, gold: &[String]) -> bool {
    let p = fold(predicted);
    !p.is_empty() && gold.iter().any(|g| fold(g) == p)
}

/// Everything a run shares across questions.
#[derive(Clone)]
pub struct Pipeline {
    pub source: Arc<dyn KgSource>,
    pub llm: Arc<dyn LlmBackend>,
    pub embedder: Arc<dyn Embedder>,
    pub prompts: PromptLibrary,
    pub config: PogConfig,
    /// Candidates for linking extracted keywords; required unless every
    /// record carries gold topics and `use_gold_topics` is set.
    pub entity_index: Option<Arc<EntityIndex>>,
    pub use_gold_topics: bool,
    pub dump_subgraphs: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Answered,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphStats {
    pub entities: usize,
    pub triples: usize,
    pub supernodes: usize,
    pub superedges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTrace {
    pub id: String,
    pub question: String,
    pub gold: Vec<String>,
    pub status: Status,
    pub answer: Option<String>,
    pub correct: bool,
    pub phase: Option<Phase>,
    pub depth: Option<usize>,
    pub evidence_source: Option<EvidenceSource>,
    pub error: Option<String>,
    pub topics: Vec<TopicEntity>,
    pub analysis: Option<QuestionAnalysis>,
    pub subgraph: Option<SubgraphStats>,
    pub phases: Vec<PhaseRecord>,
    pub predictions: Vec<PredictedEntity>,
    pub evidence: Vec<String>,
    pub reason: Option<String>,
    pub notes: Vec<String>,
    pub llm_calls: usize,
    pub prompt_chars: usize,
    pub transcript: Vec<CallRecord>,
}

struct Finished {
    outcome: AnswerOutcome,
    phase: Phase,
    depth: usize,
    evidence: Vec<String>,
}

#[derive(Default)]
struct Partial {
    topics: Vec<TopicEntity>,
    analysis: Option<QuestionAnalysis>,
    subgraph: Option<SubgraphStats>,
    phases: Vec<PhaseRecord>,
    predictions: Vec<PredictedEntity>,
}

fn resolve_topics(record: &QuestionRecord, pipeline: &Pipeline, llm: &mut LlmSession) -> Result<Vec<TopicEntity>> {
    if pipeline.use_gold_topics {
        if let Some(gold) = &record.topic_entities {
            return Ok(gold
                .iter()
                .map(|g| TopicEntity {
                    mention: g.label.clone(),
                    entity: g.id.clone(),
                    label: g.label.clone(),
                    score: 1.0,
                })
                .collect());
        }
        llm.note("record has no gold topics; linking instead");
    }
    let index = pipeline
        .entity_index
        .as_deref()
        .ok_or_else(|| Error::Config("topic linking needs an entity index".into()))?;
    llm.set_stage("linking");
    let keywords = extract_topic_keywords(&record.question, &pipeline.prompts, llm)?;
    let topics = align_to_kg(&keywords, index, pipeline.embedder.as_ref())?;
    if topics.is_empty() {
        return Err(Error::Alignment("no keyword could be aligned".into()));
    }
    Ok(topics)
}

fn answer_question(record: &QuestionRecord, pipeline: &Pipeline, llm: &mut LlmSession, partial: &mut Partial) -> Result<Finished> {
    let config = &pipeline.config;
    config.validate()?;
    let topics = resolve_topics(record, pipeline, llm)?;
    partial.topics = topics.clone();
    let labels: Vec<TopicLabel> = topics.iter().map(|t| TopicLabel::new(t.entity.clone(), t.label.clone())).collect();

    llm.set_stage("analysis");
    let analysis = analyze_question(&record.question, &labels, &pipeline.prompts, llm)?;
    partial.analysis = Some(analysis.clone());

    let ids: Vec<EntityId> = labels.iter().map(|t| t.entity.clone()).collect();
    let mut graph = build_question_subgraph(pipeline.source.as_ref(), &ids, config.d_max)?;
    if config.cluster {
        graph = cluster_supernodes(&graph);
    }
    if config.reduce {
        let reduction = reduce_by_topic_paths(&graph, config.d_max);
        for w in reduction.warnings {
            llm.note(w);
        }
        graph = reduction.subgraph;
    }
    partial.subgraph = Some(SubgraphStats {
        entities: graph.entity_count(),
        triples: graph.origin().triples().len(),
        supernodes: graph.supernode_count(),
        superedges: graph.superedges().len(),
    });
    if let Some(dir) = &pipeline.dump_subgraphs {
        fs::create_dir_all(dir)?;
        let file = dir.join(format!("{}.json", sanitize(&record.id)));
        fs::write(file, serde_json::to_string_pretty(&graph.dump())?)?;
    }

    let (order, missing) = reorder(&ids, &analysis.indicator);
    for m in missing {
        llm.note(format!("topic {m} absent from indicator; appended"));
    }
    let list_t: Vec<_> = order.iter().filter_map(|e| graph.topic_supernode(e)).collect();

    let ctx = QuestionContext {
        question: &record.question,
        split_questions: &analysis.split_questions,
        graph: &graph,
        prompts: &pipeline.prompts,
        embedder: pipeline.embedder.as_ref(),
        pog_e: config.pog_e.then_some(config.seed),
    };
    let render = |g: &crate::subgraph::QuestionSubgraph, o: &AnswerOutcome| -> Vec<String> {
        o.evidence_paths
            .iter()
            .map(|p| render_path(g, p, RenderOptions::labels(ctx.pog_e)))
            .collect()
    };
    let mut explorer = Explorer::new(ctx, &analysis, &labels, config);
    let result = (|| -> Result<Finished> {
        let topic = explorer.run_topic_phase(&list_t, llm)?;
        if let Some(outcome) = topic.answer {
            let evidence = render(&graph, &outcome);
            return Ok(Finished { outcome, phase: Phase::Topic, depth: topic.depth, evidence });
        }
        let supplement = explorer.run_supplement_phase(&list_t, &topic.paths, llm)?;
        if let Some(outcome) = supplement.answer {
            let evidence = render(&graph, &outcome);
            return Ok(Finished { outcome, phase: Phase::Supplement, depth: supplement.depth, evidence });
        }
        let (expand, grown) = explorer.run_expand_phase(pipeline.source.as_ref(), &topic.paths, &supplement.paths, llm)?;
        if let Some(outcome) = expand.answer {
            let evidence = render(&grown, &outcome);
            return Ok(Finished { outcome, phase: Phase::Expand, depth: expand.depth, evidence });
        }
        let outcome = explorer.run_final(&grown, &topic.paths, &supplement.paths, &expand.paths, llm)?;
        let evidence = render(&grown, &outcome);
        Ok(Finished { outcome, phase: Phase::Final, depth: config.d_max, evidence })
    })();
    partial.phases = std::mem::take(&mut explorer.records);
    partial.predictions = std::mem::take(&mut explorer.predictions);
    result
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Run one question end to end. Failures are recorded in the trace.
pub fn run_question(record: &QuestionRecord, pipeline: &Pipeline) -> QuestionTrace {
    let mut llm = LlmSession::new(pipeline.llm.clone(), pipeline.config.llm.clone());
    let mut partial = Partial::default();
    let result = answer_question(record, pipeline, &mut llm, &mut partial);
    let (transcript, notes) = llm.into_parts();
    let mut trace = QuestionTrace {
        id: record.id.clone(),
        question: record.question.clone(),
        gold: record.answers.clone(),
        status: Status::Failed,
        answer: None,
        correct: false,
        phase: None,
        depth: None,
        evidence_source: None,
        error: None,
        topics: partial.topics,
        analysis: partial.analysis,
        subgraph: partial.subgraph,
        phases: partial.phases,
        predictions: partial.predictions,
        evidence: Vec::new(),
        reason: None,
        notes,
        llm_calls: transcript.call_count(),
        prompt_chars: transcript.prompt_chars(),
        transcript: transcript.records().to_vec(),
    };
    match result {
        Ok(done) => {
            trace.status = Status::Answered;
            trace.correct = done.outcome.answer.as_deref().is_some_and(|a| hits_at_1(a, &record.answers));
            trace.answer = done.outcome.answer;
            trace.phase = Some(done.phase);
            trace.depth = Some(done.depth);
            trace.evidence_source = Some(done.outcome.evidence_source);
            trace.reason = Some(done.outcome.reason);
            trace.evidence = done.evidence;
        }
        Err(e) => {
            tracing::warn!(id = %record.id, "question failed: {e}");
            trace.error = Some(e.to_string());
        }
    }
    trace
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSummary {
    pub id: String,
    pub answer: Option<String>,
    pub correct: bool,
    pub status: Status,
    pub phase: Option<Phase>,
    pub depth: Option<usize>,
    pub evidence_source: Option<EvidenceSource>,
    pub llm_calls: usize,
    pub prompt_chars: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub total: usize,
    pub correct: usize,
    pub failed: usize,
    pub hits_at_1: f64,
    pub total_llm_calls: usize,
    pub avg_llm_calls: f64,
    pub total_prompt_chars: usize,
    /// Answering phase per question, `failed` for errors.
    pub phases: BTreeMap<String, usize>,
    /// Evidence source per question, `failed` for errors.
    pub evidence_sources: BTreeMap<String, usize>,
    pub questions: Vec<QuestionSummary>,
}

impl RunMetrics {
    pub fn from_traces(traces: &[QuestionTrace]) -> Self {
        let total = traces.len();
        let correct = traces.iter().filter(|t| t.correct).count();
        let failed = traces.iter().filter(|t| t.status == Status::Failed).count();
        let total_llm_calls = traces.iter().map(|t| t.transcript.len()).sum();
        let total_prompt_chars = traces
            .iter()
            .flat_map(|t| &t.transcript)
            .map(|r| r.prompt_chars)
            .sum();
        let mut phases = BTreeMap::new();
        let mut evidence_sources = BTreeMap::new();
        for t in traces {
            let p = t.phase.map_or("failed", Phase::as_str);
            *phases.entry(p.to_owned()).or_insert(0) += 1;
            let e = t.evidence_source.map_or("failed", EvidenceSource::as_str);
            *evidence_sources.entry(e.to_owned()).or_insert(0) += 1;
        }
        let ratio = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
        Self {
            total,
            correct,
            failed,
            hits_at_1: ratio(correct),
            total_llm_calls,
            avg_llm_calls: ratio(total_llm_calls),
            total_prompt_chars,
            phases,
            evidence_sources,
            questions: traces
                .iter()
                .map(|t| QuestionSummary {
                    id: t.id.clone(),
                    answer: t.answer.clone(),
                    correct: t.correct,
                    status: t.status,
                    phase: t.phase,
                    depth: t.depth,
                    evidence_source: t.evidence_source,
                    llm_calls: t.transcript.len(),
                    prompt_chars: t.transcript.iter().map(|r| r.prompt_chars).sum(),
                })
                .collect(),
        }
    }
}

/// Run every record, up to `parallel` at a time. Trace order follows input
/// order regardless of parallelism.
pub fn run_dataset(records: &[QuestionRecord], pipeline: &Pipeline, parallel: usize) -> Result<(RunMetrics, Vec<QuestionTrace>)> {
    let traces: Vec<QuestionTrace> = if parallel <= 1 {
        records.iter().map(|r| run_question(r, pipeline)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| records.par_iter().map(|r| run_question(r, pipeline)).collect())
    };
    Ok((RunMetrics::from_traces(&traces), traces))
}

/// Write `metrics.json` and `traces.jsonl` into `dir`.
pub fn write_outputs(dir: impl AsRef<Path>, metrics: &RunMetrics, traces: &[QuestionTrace]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.json"), metrics_json(metrics)?)?;
    let mut f = fs::File::create(dir.join("traces.jsonl"))?;
    for t in traces {
        writeln!(f, "{}", serde_json::to_string(t)?)?;
    }
    Ok(())
}

pub fn metrics_json(metrics: &RunMetrics) -> Result<String> {
    let mut s = serde_json::to_string_pretty(metrics)?;
    s.push('\n');
    Ok(s)
}
