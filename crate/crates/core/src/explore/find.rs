//! Entity path enumeration over a question subgraph.

use std::collections::HashMap;

use crate::analysis::Indicator;
use crate::kg::EntityId;
use crate::subgraph::{QuestionSubgraph, SupernodeId};

use super::path::{sort_paths, EntityPath, PathOrigin, PathStep};

/// Length bounds for one enumeration: total length in
/// `(min_exclusive, max_total]`, each inter-anchor segment at most
/// `segment_cap` steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthBucket {
    pub min_exclusive: usize,
    pub max_total: usize,
    pub segment_cap: usize,
}

impl LengthBucket {
    /// Topic-phase bucket at depth `d` for `anchors` anchors.
    pub fn topic(anchors: usize, d: usize) -> Self {
        let k = anchors.max(1);
        if k == 1 {
            Self {
                min_exclusive: d.saturating_sub(1),
                max_total: d,
                segment_cap: d,
            }
        } else {
            Self {
                min_exclusive: k * d.saturating_sub(1),
                max_total: k * d,
                segment_cap: 2 * d,
            }
        }
    }

    /// Supplement-phase bucket: anything up to `topics * d_max`.
    pub fn supplement(topics: usize, d_max: usize) -> Self {
        Self {
            min_exclusive: 0,
            max_total: topics.max(1) * d_max,
            segment_cap: 2 * d_max,
        }
    }

    pub fn contains(&self, len: usize) -> bool {
        self.min_exclusive < len && len <= self.max_total
    }
}

#[derive(Debug, Clone)]
struct HalfPath {
    nodes: Vec<SupernodeId>,
    steps: Vec<PathStep>,
}

/// Simple walks from `start` grouped by length `0..=max_len`.
fn half_paths(graph: &QuestionSubgraph, start: SupernodeId, max_len: usize) -> Vec<Vec<HalfPath>> {
    let mut layers = vec![Vec::new(); max_len + 1];
    let mut nodes = vec![start];
    let mut steps = Vec::new();
    fn go(
        graph: &QuestionSubgraph,
        max_len: usize,
        nodes: &mut Vec<SupernodeId>,
        steps: &mut Vec<PathStep>,
        layers: &mut Vec<Vec<HalfPath>>,
    ) {
        layers[steps.len()].push(HalfPath {
            nodes: nodes.clone(),
            steps: steps.clone(),
        });
        if steps.len() == max_len {
            return;
        }
        let here = *nodes.last().expect("walk has a start");
        for adj in graph.adjacent(here) {
            if nodes.contains(&adj.neighbor) {
                continue;
            }
            steps.push(PathStep {
                from: here,
                edge: adj.edge,
                to: adj.neighbor,
                direction: adj.direction,
            });
            nodes.push(adj.neighbor);
            go(graph, max_len, nodes, steps, layers);
            nodes.pop();
            steps.pop();
        }
    }
    go(graph, max_len, &mut nodes, &mut steps, &mut layers);
    layers
}

/// All simple `source`–`target` step sequences of length `1..=max_len`,
/// joined from forward and backward halves meeting in the middle.
pub fn segment_paths(graph: &QuestionSubgraph, source: SupernodeId, target: SupernodeId, max_len: usize) -> Vec<Vec<PathStep>> {
    if source == target {
        return vec![Vec::new()];
    }
    if max_len == 0 {
        return Vec::new();
    }
    let forward = half_paths(graph, source, max_len.div_ceil(2));
    let backward = half_paths(graph, target, max_len / 2);
    let mut by_end: Vec<HashMap<SupernodeId, Vec<usize>>> = Vec::with_capacity(backward.len());
    for layer in &backward {
        let mut m: HashMap<SupernodeId, Vec<usize>> = HashMap::new();
        for (i, h) in layer.iter().enumerate() {
            m.entry(*h.nodes.last().expect("non-empty")).or_default().push(i);
        }
        by_end.push(m);
    }
    let mut out = Vec::new();
    for len in 1..=max_len {
        let f = len.div_ceil(2);
        let b = len - f;
        for fp in &forward[f] {
            let meet = *fp.nodes.last().expect("non-empty");
            let Some(candidates) = by_end[b].get(&meet) else { continue };
            for &bi in candidates {
                let bp = &backward[b][bi];
                let disjoint = bp.nodes[..bp.nodes.len() - 1].iter().all(|n| !fp.nodes.contains(n));
                if !disjoint {
                    continue;
                }
                let mut steps = fp.steps.clone();
                steps.extend(bp.steps.iter().rev().map(|s| s.reversed()));
                out.push(steps);
            }
        }
    }
    out
}

/// Enumerate entity paths through `anchors` in order whose length falls in
/// `bucket`. Output is sorted canonically.
pub fn find_paths(graph: &QuestionSubgraph, anchors: &[SupernodeId], bucket: LengthBucket, origin: PathOrigin) -> Vec<EntityPath> {
    let mut out = Vec::new();
    match anchors {
        [] => {}
        [single] => {
            let layers = half_paths(graph, *single, bucket.max_total);
            for layer in layers.into_iter().skip(bucket.min_exclusive + 1) {
                for h in layer {
                    out.push(EntityPath {
                        anchors: vec![*single],
                        anchor_positions: vec![0],
                        steps: h.steps,
                        origin,
                    });
                }
            }
        }
        _ => {
            let cap = bucket.segment_cap.min(bucket.max_total);
            let segments: Vec<Vec<Vec<PathStep>>> = anchors
                .windows(2)
                .map(|w| segment_paths(graph, w[0], w[1], cap))
                .collect();
            if segments.iter().any(Vec::is_empty) {
                return out;
            }
            let shortest: Vec<usize> = segments
                .iter()
                .map(|s| s.iter().map(Vec::len).min().unwrap_or(0))
                .collect();
            let mut suffix_min = vec![0; segments.len() + 1];
            for i in (0..segments.len()).rev() {
                suffix_min[i] = suffix_min[i + 1] + shortest[i];
            }
            let mut chosen: Vec<&Vec<PathStep>> = Vec::with_capacity(segments.len());
            combine(&segments, &suffix_min, bucket, anchors, origin, 0, 0, &mut chosen, &mut out);
        }
    }
    sort_paths(&mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn combine<'a>(
    segments: &'a [Vec<Vec<PathStep>>],
    suffix_min: &[usize],
    bucket: LengthBucket,
    anchors: &[SupernodeId],
    origin: PathOrigin,
    index: usize,
    total: usize,
    chosen: &mut Vec<&'a Vec<PathStep>>,
    out: &mut Vec<EntityPath>,
) {
    if index == segments.len() {
        if bucket.contains(total) {
            let mut steps = Vec::with_capacity(total);
            let mut positions = Vec::with_capacity(anchors.len());
            for seg in chosen.iter() {
                positions.push(steps.len());
                steps.extend(seg.iter().copied());
            }
            positions.push(steps.len());
            out.push(EntityPath {
                anchors: anchors.to_vec(),
                anchor_positions: positions,
                steps,
                origin,
            });
        }
        return;
    }
    for seg in &segments[index] {
        let t = total + seg.len();
        if t + suffix_min[index + 1] > bucket.max_total {
            continue;
        }
        chosen.push(seg);
        combine(segments, suffix_min, bucket, anchors, origin, index + 1, t, chosen, out);
        chosen.pop();
    }
}

/// Topic-phase enumeration at depth `d`.
pub fn entity_path_find(graph: &QuestionSubgraph, anchors: &[SupernodeId], d: usize) -> Vec<EntityPath> {
    if d == 0 {
        return Vec::new();
    }
    find_paths(graph, anchors, LengthBucket::topic(anchors.len(), d), PathOrigin::Topic)
}

/// Order topics by first mention in `indicator`; unmentioned topics keep
/// their relative order at the end and are reported.
pub fn reorder(topics: &[EntityId], indicator: &Indicator) -> (Vec<EntityId>, Vec<EntityId>) {
    let mut keyed: Vec<(Option<usize>, usize, &EntityId)> = topics
        .iter()
        .enumerate()
        .map(|(i, t)| (indicator.position_of(t), i, t))
        .collect();
    keyed.sort_by_key(|(pos, i, _)| (pos.is_none(), pos.unwrap_or(0), *i));
    let missing = keyed.iter().filter(|(p, _, _)| p.is_none()).map(|(_, _, t)| (*t).clone()).collect();
    (keyed.into_iter().map(|(_, _, t)| t.clone()).collect(), missing)
}
