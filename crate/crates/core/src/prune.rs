//! Path rendering and beam-search pruning: fuzzy, precise and branch-reduced
//! selection composed into four strategies.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{render_split_questions, Indicator};
use crate::embed::{rank_by_cosine, Embedder};
use crate::error::{Error, Result};
use crate::explore::{EntityPath, PathStep};
use crate::llm::{LlmSession, Purpose};
use crate::prompts::{self, PromptLibrary};
use crate::subgraph::{QuestionSubgraph, SupernodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruningStrategy {
    #[serde(alias = "fuzzy")]
    FuzzyOnly,
    FuzzyPrecise,
    FuzzyBranch,
    ThreeStep,
}

impl PruningStrategy {
    pub const ALL: [PruningStrategy; 4] = [
        PruningStrategy::FuzzyOnly,
        PruningStrategy::FuzzyPrecise,
        PruningStrategy::FuzzyBranch,
        PruningStrategy::ThreeStep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PruningStrategy::FuzzyOnly => "fuzzy",
            PruningStrategy::FuzzyPrecise => "fuzzy-precise",
            PruningStrategy::FuzzyBranch => "fuzzy-branch",
            PruningStrategy::ThreeStep => "three-step",
        }
    }
}

impl fmt::Display for PruningStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PruningStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fuzzy" | "fuzzy-only" => Ok(PruningStrategy::FuzzyOnly),
            "fuzzy-precise" => Ok(PruningStrategy::FuzzyPrecise),
            "fuzzy-branch" => Ok(PruningStrategy::FuzzyBranch),
            "three-step" => Ok(PruningStrategy::ThreeStep),
            other => Err(Error::Config(format!("unknown pruning strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamWidths {
    pub w1: usize,
    pub w2: usize,
    pub w_max: usize,
}

impl Default for BeamWidths {
    fn default() -> Self {
        Self { w1: 80, w2: 20, w_max: 3 }
    }
}

impl BeamWidths {
    pub fn validate(&self) -> Result<()> {
        if self.w_max == 0 {
            return Err(Error::Config("W_max must be positive".into()));
        }
        if !(self.w_max <= self.w2 && self.w2 <= self.w1) {
            return Err(Error::Config(format!(
                "beam widths must satisfy W_max <= W2 <= W1, got {}/{}/{}",
                self.w_max, self.w2, self.w1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityStyle {
    LabelOnly,
    IdAndLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub style: EntityStyle,
    /// Seed for sampling one relation per superedge; `None` renders the full set.
    pub pog_e: Option<u64>,
}

impl RenderOptions {
    pub fn prompt(pog_e: Option<u64>) -> Self {
        Self {
            style: EntityStyle::IdAndLabel,
            pog_e,
        }
    }

    pub fn labels(pog_e: Option<u64>) -> Self {
        Self {
            style: EntityStyle::LabelOnly,
            pog_e,
        }
    }
}

pub fn render_supernode(graph: &QuestionSubgraph, node: SupernodeId, style: EntityStyle) -> String {
    let parts: Vec<String> = graph
        .members(node)
        .iter()
        .map(|e| match style {
            EntityStyle::LabelOnly => graph.label(e.as_str()),
            EntityStyle::IdAndLabel => format!("{} {}", e, graph.label(e.as_str())),
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// Relation chosen for superedge `edge` under PoG-E sampling.
pub fn sample_relation(graph: &QuestionSubgraph, edge: usize, seed: u64) -> &str {
    let rels = &graph.superedge(edge).relations;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (edge as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let pick = rng.random_range(0..rels.len());
    rels.iter().nth(pick).map(String::as_str).unwrap_or_default()
}

fn render_relations(graph: &QuestionSubgraph, step: &PathStep, pog_e: Option<u64>) -> String {
    let rels = step.relations(graph);
    if let Some(seed) = pog_e {
        return sample_relation(graph, step.edge, seed).to_owned();
    }
    if rels.len() == 1 {
        rels.iter().next().cloned().unwrap_or_default()
    } else {
        format!("{{{}}}", rels.iter().cloned().collect::<Vec<_>>().join(", "))
    }
}

pub fn render_path(graph: &QuestionSubgraph, path: &EntityPath, options: RenderOptions) -> String {
    let nodes = path.nodes();
    let mut out = nodes
        .first()
        .map(|n| render_supernode(graph, *n, options.style))
        .unwrap_or_default();
    for step in &path.steps {
        out.push_str(" -> ");
        out.push_str(&render_relations(graph, step, options.pog_e));
        out.push_str(" -> ");
        out.push_str(&render_supernode(graph, step.to, options.style));
    }
    out
}

pub fn render_numbered(graph: &QuestionSubgraph, paths: &[EntityPath], options: RenderOptions) -> String {
    let mut out = String::new();
    for (i, p) in paths.iter().enumerate() {
        out.push_str(&format!("\nPath {i}: {}", render_path(graph, p, options)));
    }
    out
}

/// What every selection and answering call needs to know about the question.
#[derive(Clone, Copy)]
pub struct QuestionContext<'a> {
    pub question: &'a str,
    pub split_questions: &'a [String],
    pub graph: &'a QuestionSubgraph,
    pub prompts: &'a PromptLibrary,
    pub embedder: &'a dyn Embedder,
    pub pog_e: Option<u64>,
}

impl<'a> QuestionContext<'a> {
    pub fn with_graph(self, graph: &'a QuestionSubgraph) -> Self {
        Self { graph, ..self }
    }

    pub fn prompt_render(&self) -> RenderOptions {
        RenderOptions::prompt(self.pog_e)
    }

    pub fn split_text(&self) -> String {
        render_split_questions(self.split_questions)
    }
}

/// Top-`w` paths by cosine between the indicator and each label-only
/// rendering; ties keep input order.
pub fn fuzzy_select(
    ctx: &QuestionContext<'_>,
    paths: &[EntityPath],
    indicator: &Indicator,
    w: usize,
) -> Result<Vec<EntityPath>> {
    if w == 0 {
        return Err(Error::Precondition("beam width must be positive".into()));
    }
    if paths.is_empty() {
        return Ok(Vec::new());
    }
    let query = ctx.embedder.embed_one(&indicator.raw)?;
    let texts: Vec<String> = paths
        .iter()
        .map(|p| render_path(ctx.graph, p, RenderOptions::labels(ctx.pog_e)))
        .collect();
    let vectors = ctx.embedder.embed(&texts)?;
    Ok(rank_by_cosine(&query, &vectors)?
        .into_iter()
        .take(w)
        .map(|(i, _)| paths[i].clone())
        .collect())
}

/// First bracketed list of integers in `reply`, e.g. `[2, 0, 1]`.
pub fn parse_index_list(reply: &str) -> Option<Vec<i64>> {
    let mut rest = reply;
    while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        let close = after.find(']')?;
        let inner = &after[..close];
        let items: Vec<&str> = inner
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if !items.is_empty() {
            if let Ok(nums) = items
                .iter()
                .map(|s| s.trim_start_matches("Path").trim().parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
            {
                return Some(nums);
            }
        }
        rest = &after[close + 1..];
    }
    None
}

/// Ask the model to rank numbered paths and keep the top `w` valid indices.
/// Falls back to fuzzy selection after a second unusable reply.
pub fn precise_select(
    ctx: &QuestionContext<'_>,
    paths: &[EntityPath],
    indicator: &Indicator,
    w: usize,
    llm: &mut LlmSession,
) -> Result<Vec<EntityPath>> {
    if w == 0 {
        return Err(Error::Precondition("beam width must be positive".into()));
    }
    if paths.len() <= w {
        return Ok(paths.to_vec());
    }
    let candidates = render_numbered(ctx.graph, paths, ctx.prompt_render());
    let split = ctx.split_text();
    let prompt = ctx.prompts.render(
        Purpose::PreciseSelect,
        &[
            (prompts::QUERY, ctx.question),
            (prompts::THINK_INDICATOR, &indicator.raw),
            (prompts::SPLIT_QUESTION, &split),
            (prompts::CANDIDATE_PATHS, &candidates),
        ],
    );
    for attempt in 0..2 {
        let reply = llm.complete(Purpose::PreciseSelect, prompt.clone())?;
        let mut picked = Vec::new();
        let mut seen = HashSet::new();
        for i in parse_index_list(&reply).unwrap_or_default() {
            if i < 0 || i as usize >= paths.len() {
                continue;
            }
            if seen.insert(i) {
                picked.push(paths[i as usize].clone());
            }
            if picked.len() == w {
                break;
            }
        }
        if !picked.is_empty() {
            return Ok(picked);
        }
        if attempt == 0 {
            llm.note("precise selection reply had no usable index list, retrying");
        }
    }
    llm.note("precise selection degraded to fuzzy selection");
    fuzzy_select(ctx, paths, indicator, w)
}

fn prefix_path(path: &EntityPath, anchor_index: usize, d: usize) -> Option<EntityPath> {
    let head = path.head_steps(anchor_index, d);
    if head.is_empty() {
        return None;
    }
    Some(EntityPath {
        anchors: vec![path.anchors[anchor_index]],
        anchor_positions: vec![0],
        steps: head.to_vec(),
        origin: path.origin,
    })
}

/// Iteratively rank `d`-step prefixes of each anchored segment and keep the
/// candidates sharing a surviving prefix, for `d = 1..=d_max`.
pub fn branch_reduced_select(
    ctx: &QuestionContext<'_>,
    paths: &[EntityPath],
    indicator: &Indicator,
    w: usize,
    d_max: usize,
    llm: &mut LlmSession,
) -> Result<Vec<EntityPath>> {
    if w == 0 {
        return Err(Error::Precondition("beam width must be positive".into()));
    }
    let mut candidates = paths.to_vec();
    let mut d = 1;
    while candidates.len() > w && d <= d_max {
        let mut seen: HashSet<Vec<PathStep>> = HashSet::new();
        let mut prefixes = Vec::new();
        for c in &candidates {
            for e in 0..c.anchors.len() {
                if let Some(p) = prefix_path(c, e, d) {
                    if seen.insert(p.steps.clone()) {
                        prefixes.push(p);
                    }
                }
            }
        }
        if prefixes.len() > w {
            let survivors: HashSet<Vec<PathStep>> = precise_select(ctx, &prefixes, indicator, w, llm)?
                .into_iter()
                .map(|p| p.steps)
                .collect();
            candidates.retain(|c| {
                (0..c.anchors.len()).any(|e| {
                    let head = c.head_steps(e, d);
                    !head.is_empty() && survivors.contains(head)
                })
            });
        }
        d += 1;
    }
    if candidates.len() > w {
        candidates = precise_select(ctx, &candidates, indicator, w, llm)?;
    }
    Ok(candidates)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub paths: Vec<EntityPath>,
    /// Input size followed by the size after each stage.
    pub stages: Vec<usize>,
}

pub fn apply_strategy(
    ctx: &QuestionContext<'_>,
    strategy: PruningStrategy,
    widths: BeamWidths,
    d_max: usize,
    paths: &[EntityPath],
    indicator: &Indicator,
    llm: &mut LlmSession,
) -> Result<PruneReport> {
    let mut stages = vec![paths.len()];
    let mut cur = match strategy {
        PruningStrategy::FuzzyOnly => fuzzy_select(ctx, paths, indicator, widths.w_max)?,
        _ => fuzzy_select(ctx, paths, indicator, widths.w1)?,
    };
    stages.push(cur.len());
    match strategy {
        PruningStrategy::FuzzyOnly => {}
        PruningStrategy::FuzzyPrecise => {
            cur = precise_select(ctx, &cur, indicator, widths.w_max, llm)?;
            stages.push(cur.len());
        }
        PruningStrategy::FuzzyBranch => {
            cur = branch_reduced_select(ctx, &cur, indicator, widths.w_max, d_max, llm)?;
            stages.push(cur.len());
        }
        PruningStrategy::ThreeStep => {
            cur = branch_reduced_select(ctx, &cur, indicator, widths.w2, d_max, llm)?;
            stages.push(cur.len());
            cur = precise_select(ctx, &cur, indicator, widths.w_max, llm)?;
            stages.push(cur.len());
        }
    }
    Ok(PruneReport { paths: cur, stages })
}
