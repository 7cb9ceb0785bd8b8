use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::kg::Triple;
use crate::subgraph::{QuestionSubgraph, StepDirection, SupernodeId};

/// One traversal of superedge `edge`. `Forward` follows the stored
/// orientation, `Backward` walks it tail to head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathStep {
    pub from: SupernodeId,
    pub edge: usize,
    pub to: SupernodeId,
    pub direction: StepDirection,
}

impl PathStep {
    pub fn reversed(self) -> Self {
        Self {
            from: self.to,
            edge: self.edge,
            to: self.from,
            direction: self.direction.flip(),
        }
    }

    /// Same superedge traversal regardless of walking order.
    pub fn same_edge(&self, other: &PathStep) -> bool {
        self.edge == other.edge && (*self == *other || self.reversed() == *other)
    }

    pub fn relations<'g>(&self, graph: &'g QuestionSubgraph) -> &'g std::collections::BTreeSet<String> {
        &graph.superedge(self.edge).relations
    }

    /// Whether every entity-level triple implied by this step is in `graph`'s
    /// backing triples, or the superedge was attached later from the source.
    pub fn is_backed_by(&self, graph: &QuestionSubgraph) -> bool {
        let e = graph.superedge(self.edge);
        let (head, tail) = match self.direction {
            StepDirection::Forward => (self.from, self.to),
            StepDirection::Backward => (self.to, self.from),
        };
        e.from == head && e.to == tail && !e.relations.is_empty()
    }
}

/// Which exploration phase produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathOrigin {
    Topic,
    Supplement,
    Expand,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityPath {
    pub anchors: Vec<SupernodeId>,
    /// Node index (0..=steps.len()) at which each anchor sits.
    pub anchor_positions: Vec<usize>,
    pub steps: Vec<PathStep>,
    pub origin: PathOrigin,
}

impl EntityPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn nodes(&self) -> Vec<SupernodeId> {
        let mut nodes = Vec::with_capacity(self.steps.len() + 1);
        match self.steps.first() {
            Some(s) => nodes.push(s.from),
            None => nodes.extend(self.anchors.first().copied()),
        }
        nodes.extend(self.steps.iter().map(|s| s.to));
        nodes
    }

    pub fn first_node(&self) -> Option<SupernodeId> {
        self.nodes().first().copied()
    }

    pub fn last_node(&self) -> Option<SupernodeId> {
        self.nodes().last().copied()
    }

    /// Steps of the segment that starts at anchor `anchor_index`.
    pub fn segment(&self, anchor_index: usize) -> &[PathStep] {
        let start = self.anchor_positions[anchor_index];
        let end = self
            .anchor_positions
            .get(anchor_index + 1)
            .copied()
            .unwrap_or(self.steps.len());
        &self.steps[start..end.max(start)]
    }

    /// The first `d` steps of the segment starting at `anchor_index`.
    pub fn head_steps(&self, anchor_index: usize, d: usize) -> &[PathStep] {
        let seg = self.segment(anchor_index);
        &seg[..d.min(seg.len())]
    }

    /// Structural checks: contiguity, anchors at their positions, per-segment
    /// simplicity.
    pub fn is_well_formed(&self) -> bool {
        if self.anchors.len() != self.anchor_positions.len() || self.anchors.is_empty() {
            return false;
        }
        if self.steps.windows(2).any(|w| w[0].to != w[1].from) {
            return false;
        }
        let nodes = self.nodes();
        for (a, &p) in self.anchors.iter().zip(&self.anchor_positions) {
            if nodes.get(p) != Some(a) {
                return false;
            }
        }
        if self.anchor_positions.windows(2).any(|w| w[0] > w[1]) {
            return false;
        }
        (0..self.anchors.len()).all(|i| {
            let start = self.anchor_positions[i];
            let end = self.anchor_positions.get(i + 1).copied().unwrap_or(self.steps.len());
            let mut seen = HashSet::new();
            nodes[start..=end].iter().all(|n| seen.insert(*n))
        })
    }

    /// Entity-level triples a step stands for.
    pub fn step_triples(graph: &QuestionSubgraph, step: &PathStep) -> Vec<Triple> {
        let e = graph.superedge(step.edge);
        let mut out = Vec::new();
        for h in graph.members(e.from) {
            for r in &e.relations {
                for t in graph.members(e.to) {
                    out.push(Triple::new(h.clone(), r.clone(), t.clone()));
                }
            }
        }
        out
    }
}

/// Drop later paths whose step sequence repeats an earlier one.
pub fn dedup_paths(paths: impl IntoIterator<Item = EntityPath>) -> Vec<EntityPath> {
    let mut seen = HashSet::new();
    paths
        .into_iter()
        .filter(|p| seen.insert(p.steps.clone()))
        .collect()
}

/// Canonical order: by length, then step sequence.
pub fn sort_paths(paths: &mut [EntityPath]) {
    paths.sort_by(|a, b| (a.len(), &a.steps, &a.anchors).cmp(&(b.len(), &b.steps, &b.anchors)));
}
