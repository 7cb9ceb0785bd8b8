//! Brute-force reference implementations used by the property and
//! acceptance tests.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use pog_core::explore::EntityPath;
use pog_core::{EntityId, KnowledgeGraph, QuestionSubgraph, SupernodeId, Triple};
use rand::seq::SliceRandom;
use rand::Rng;

/// A path as `(from, superedge, to)` triples over supernode indices.
pub type Walk = Vec<(u32, usize, u32)>;

pub const RELATIONS: [&str; 4] = ["r.a", "r.b", "r.c", "r.d"];

/// Random graph with at most `max_nodes` entities and `max_edges` triples.
/// Every entity is registered even when isolated.
pub fn random_kg(rng: &mut impl Rng, max_nodes: usize, max_edges: usize) -> KnowledgeGraph {
    let n = rng.random_range(3..=max_nodes);
    let m = rng.random_range(n.saturating_sub(1)..=max_edges);
    let ids: Vec<EntityId> = (0..n).map(|i| EntityId::new(format!("e{i}"))).collect();
    let triples: Vec<Triple> = (0..m)
        .map(|_| {
            let h = rng.random_range(0..n);
            let t = rng.random_range(0..n);
            let r = RELATIONS[rng.random_range(0..RELATIONS.len())];
            Triple::new(ids[h].clone(), r, ids[t].clone())
        })
        .collect();
    KnowledgeGraph::with_entities(ids, triples, HashMap::new())
}

/// Random graph whose non-topic entities come in look-alike groups, so that
/// clustering has something to merge.
pub fn random_kg_with_twins(rng: &mut impl Rng, max_nodes: usize, max_edges: usize) -> KnowledgeGraph {
    let base = random_kg(rng, max_nodes.saturating_sub(4).max(3), max_edges.saturating_sub(8).max(2));
    let mut triples: Vec<Triple> = base.triples().to_vec();
    let entities: Vec<EntityId> = base.entities().iter().cloned().collect();
    let twins = rng.random_range(1..=4);
    for k in 0..twins {
        let template = &entities[rng.random_range(0..entities.len())];
        let id = EntityId::new(format!("twin{k}"));
        let copies: Vec<Triple> = triples
            .iter()
            .filter_map(|t| {
                if &t.head == template && &t.tail != template {
                    Some(Triple::new(id.clone(), t.relation.clone(), t.tail.clone()))
                } else if &t.tail == template && &t.head != template {
                    Some(Triple::new(t.head.clone(), t.relation.clone(), id.clone()))
                } else {
                    None
                }
            })
            .collect();
        if triples.len() + copies.len() <= max_edges {
            triples.extend(copies);
        }
    }
    KnowledgeGraph::with_entities(entities, triples, HashMap::new())
}

pub fn pick_topics(rng: &mut impl Rng, kg: &KnowledgeGraph, k: usize) -> Vec<EntityId> {
    let mut all: Vec<EntityId> = kg.entities().iter().cloned().collect();
    all.shuffle(rng);
    all.truncate(k);
    all
}

fn adjacency(g: &QuestionSubgraph) -> Vec<Vec<(usize, u32)>> {
    let mut adj = vec![Vec::new(); g.supernode_count()];
    for (i, e) in g.superedges().iter().enumerate() {
        if e.from == e.to {
            continue;
        }
        adj[e.from.index()].push((i, e.to.0));
        adj[e.to.index()].push((i, e.from.0));
    }
    adj
}

fn dfs(
    adj: &[Vec<(usize, u32)>],
    here: u32,
    target: Option<u32>,
    max_len: usize,
    seen: &mut Vec<bool>,
    walk: &mut Walk,
    out: &mut Vec<Walk>,
) {
    match target {
        Some(t) if here == t => {
            out.push(walk.clone());
            return;
        }
        None => out.push(walk.clone()),
        _ => {}
    }
    if walk.len() == max_len {
        return;
    }
    for &(edge, next) in &adj[here as usize] {
        if seen[next as usize] {
            continue;
        }
        seen[next as usize] = true;
        walk.push((here, edge, next));
        dfs(adj, next, target, max_len, seen, walk, out);
        walk.pop();
        seen[next as usize] = false;
    }
}

/// Every simple walk from `source` of length at most `max_len`, or only those
/// ending at `target` when given.
pub fn simple_walks(g: &QuestionSubgraph, source: SupernodeId, target: Option<SupernodeId>, max_len: usize) -> Vec<Walk> {
    let adj = adjacency(g);
    let mut seen = vec![false; g.supernode_count()];
    seen[source.index()] = true;
    let mut out = Vec::new();
    dfs(&adj, source.0, target.map(|t| t.0), max_len, &mut seen, &mut Vec::new(), &mut out);
    out
}

/// Reference enumeration for the topic-phase bucket at depth `d`.
///
/// One anchor: simple walks of length in `(d-1, d]`. Several anchors: the
/// concatenation of simple anchor-to-anchor segments, each at most `2d`
/// long, with total length in `(k(d-1), kd]`.
pub fn oracle_paths(g: &QuestionSubgraph, anchors: &[SupernodeId], d: usize) -> BTreeSet<Walk> {
    let k = anchors.len();
    if k == 1 {
        return simple_walks(g, anchors[0], None, d)
            .into_iter()
            .filter(|w| w.len() + 1 > d && w.len() <= d)
            .collect();
    }
    let (lo, hi, cap) = (k * (d - 1), k * d, 2 * d);
    let segments: Vec<Vec<Walk>> = anchors
        .windows(2)
        .map(|p| simple_walks(g, p[0], Some(p[1]), cap))
        .collect();
    let mut partial: Vec<Walk> = vec![Vec::new()];
    for seg in &segments {
        let mut next = Vec::new();
        for prefix in &partial {
            for s in seg {
                if prefix.len() + s.len() <= hi {
                    let mut w = prefix.clone();
                    w.extend(s.iter().copied());
                    next.push(w);
                }
            }
        }
        partial = next;
    }
    partial.into_iter().filter(|w| w.len() > lo && w.len() <= hi).collect()
}

pub fn walk_of(path: &EntityPath) -> Walk {
    path.steps.iter().map(|s| (s.from.0, s.edge, s.to.0)).collect()
}

/// Entities lying on some simple topic-to-topic walk of length at most `bound`.
pub fn entities_on_topic_paths(g: &QuestionSubgraph, bound: usize) -> (BTreeSet<EntityId>, Vec<bool>) {
    let topics: Vec<SupernodeId> = g.topics().iter().map(|(_, s)| *s).collect();
    let mut nodes = BTreeSet::new();
    let mut connected = vec![false; topics.len()];
    for (i, &s) in topics.iter().enumerate() {
        for (j, &t) in topics.iter().enumerate() {
            if i == j {
                continue;
            }
            for w in simple_walks(g, s, Some(t), bound) {
                connected[i] = true;
                nodes.insert(s.0);
                nodes.extend(w.iter().map(|&(_, _, to)| to));
            }
        }
    }
    let entities = nodes
        .into_iter()
        .flat_map(|n| g.members(SupernodeId(n)).iter().cloned())
        .collect();
    (entities, connected)
}

pub fn entity_set(g: &QuestionSubgraph) -> BTreeSet<EntityId> {
    g.supernodes().flat_map(|s| g.members(s).iter().cloned()).collect()
}

pub fn triple_multiset(triples: impl IntoIterator<Item = Triple>) -> BTreeMap<Triple, usize> {
    let mut out = BTreeMap::new();
    for t in triples {
        *out.entry(t).or_insert(0) += 1;
    }
    out
}
