//! Question subgraph construction: D_max-hop expansion around topic entities,
//! supernode clustering and topic-path reduction.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{Direction, EntityId, KgSource, KnowledgeGraph, NeighborRecord, Triple, UNNAMED_ENTITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupernodeId(pub u32);

impl SupernodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SupernodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Clustered edge: every relation in `relations` links every member of `from`
/// to every member of `to`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Superedge {
    pub from: SupernodeId,
    pub relations: BTreeSet<String>,
    pub to: SupernodeId,
}

/// Orientation of a traversal relative to the stored superedge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepDirection {
    Forward,
    Backward,
}

impl StepDirection {
    pub fn flip(self) -> Self {
        match self {
            StepDirection::Forward => StepDirection::Backward,
            StepDirection::Backward => StepDirection::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adjacent {
    pub edge: usize,
    pub neighbor: SupernodeId,
    pub direction: StepDirection,
}

#[derive(Debug, Clone)]
pub struct QuestionSubgraph {
    members: Vec<BTreeSet<EntityId>>,
    superedges: Vec<Superedge>,
    topics: Vec<(EntityId, SupernodeId)>,
    entity_index: HashMap<EntityId, SupernodeId>,
    labels: HashMap<String, String>,
    origin: KnowledgeGraph,
    adjacency: Vec<Vec<Adjacent>>,
    clustered: bool,
}

/// JSON debug dump of a subgraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphDump {
    pub supernodes: Vec<SupernodeDump>,
    pub superedges: Vec<Superedge>,
    pub topics: BTreeMap<EntityId, SupernodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupernodeDump {
    pub id: SupernodeId,
    pub members: Vec<(EntityId, String)>,
}

impl QuestionSubgraph {
    /// One supernode per entity, one superedge per triple.
    pub fn unclustered(origin: KnowledgeGraph, topics: &[EntityId]) -> Result<Self> {
        for t in topics {
            if !origin.contains(t) {
                return Err(Error::Build { entity: t.to_string() });
            }
        }
        let members: Vec<BTreeSet<EntityId>> = origin
            .entities()
            .iter()
            .map(|e| BTreeSet::from([e.clone()]))
            .collect();
        let entity_index: HashMap<EntityId, SupernodeId> = origin
            .entities()
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), SupernodeId(i as u32)))
            .collect();
        let superedges = origin
            .triples()
            .iter()
            .map(|t| Superedge {
                from: entity_index[&t.head],
                relations: BTreeSet::from([t.relation.clone()]),
                to: entity_index[&t.tail],
            })
            .collect();
        let topics = dedup_topics(topics)
            .into_iter()
            .map(|t| {
                let s = entity_index[&t];
                (t, s)
            })
            .collect();
        let labels = origin.label_map().clone();
        let mut graph = Self {
            members,
            superedges,
            topics,
            entity_index,
            labels,
            origin,
            adjacency: Vec::new(),
            clustered: false,
        };
        graph.rebuild_adjacency();
        Ok(graph)
    }

    fn rebuild_adjacency(&mut self) {
        let mut adjacency = vec![Vec::new(); self.members.len()];
        for (i, e) in self.superedges.iter().enumerate() {
            if e.from == e.to {
                continue;
            }
            adjacency[e.from.index()].push(Adjacent {
                edge: i,
                neighbor: e.to,
                direction: StepDirection::Forward,
            });
            adjacency[e.to.index()].push(Adjacent {
                edge: i,
                neighbor: e.from,
                direction: StepDirection::Backward,
            });
        }
        self.adjacency = adjacency;
    }

    pub fn supernode_count(&self) -> usize {
        self.members.len()
    }

    pub fn supernodes(&self) -> impl Iterator<Item = SupernodeId> {
        (0..self.members.len() as u32).map(SupernodeId)
    }

    pub fn members(&self, node: SupernodeId) -> &BTreeSet<EntityId> {
        &self.members[node.index()]
    }

    pub fn superedges(&self) -> &[Superedge] {
        &self.superedges
    }

    pub fn superedge(&self, edge: usize) -> &Superedge {
        &self.superedges[edge]
    }

    pub fn adjacent(&self, node: SupernodeId) -> &[Adjacent] {
        &self.adjacency[node.index()]
    }

    /// Topic entities in the order they were supplied.
    pub fn topics(&self) -> &[(EntityId, SupernodeId)] {
        &self.topics
    }

    pub fn topic_supernode(&self, entity: &EntityId) -> Option<SupernodeId> {
        self.topics.iter().find(|(e, _)| e == entity).map(|(_, s)| *s)
    }

    pub fn supernode_of(&self, entity: &EntityId) -> Option<SupernodeId> {
        self.entity_index.get(entity).copied()
    }

    pub fn is_topic(&self, node: SupernodeId) -> bool {
        self.topics.iter().any(|(_, s)| *s == node)
    }

    pub fn origin(&self) -> &KnowledgeGraph {
        &self.origin
    }

    pub fn is_clustered(&self) -> bool {
        self.clustered
    }

    pub fn entity_count(&self) -> usize {
        self.members.iter().map(BTreeSet::len).sum()
    }

    pub fn label(&self, id: &str) -> String {
        match self.labels.get(id) {
            Some(l) => l.clone(),
            None if self.origin.relations().contains(id) => id.to_owned(),
            None => UNNAMED_ENTITY.to_owned(),
        }
    }

    /// Every `(entity, label)` pair covered by the subgraph.
    pub fn entity_labels(&self) -> Vec<(EntityId, String)> {
        let mut out: Vec<(EntityId, String)> = self
            .entity_index
            .keys()
            .map(|e| (e.clone(), self.label(e.as_str())))
            .collect();
        out.sort();
        out
    }

    /// Expand supernodes and relation sets back into entity-level triples.
    pub fn expand(&self) -> Vec<Triple> {
        let mut out = Vec::new();
        for e in &self.superedges {
            for h in &self.members[e.from.index()] {
                for r in &e.relations {
                    for t in &self.members[e.to.index()] {
                        out.push(Triple::new(h.clone(), r.clone(), t.clone()));
                    }
                }
            }
        }
        out
    }

    /// Undirected hop distance from `source` to every reachable supernode.
    pub fn distances_from(&self, source: SupernodeId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.members.len()];
        dist[source.index()] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].unwrap_or(0);
            for adj in self.adjacent(u) {
                if dist[adj.neighbor.index()].is_none() {
                    dist[adj.neighbor.index()] = Some(du + 1);
                    queue.push_back(adj.neighbor);
                }
            }
        }
        dist
    }

    pub fn dump(&self) -> SubgraphDump {
        SubgraphDump {
            supernodes: self
                .supernodes()
                .map(|id| SupernodeDump {
                    id,
                    members: self
                        .members(id)
                        .iter()
                        .map(|e| (e.clone(), self.label(e.as_str())))
                        .collect(),
                })
                .collect(),
            superedges: self.superedges.clone(),
            topics: self.topics.iter().cloned().collect(),
        }
    }

    /// Keep only `keep` supernodes (topics are always kept) and the superedges
    /// between them. Supernode ids are renumbered densely in original order.
    pub fn retain(&self, keep: &BTreeSet<SupernodeId>) -> QuestionSubgraph {
        let mut keep = keep.clone();
        keep.extend(self.topics.iter().map(|(_, s)| *s));
        let remap: HashMap<SupernodeId, SupernodeId> = keep
            .iter()
            .enumerate()
            .map(|(new, old)| (*old, SupernodeId(new as u32)))
            .collect();
        let members: Vec<BTreeSet<EntityId>> = keep.iter().map(|s| self.members[s.index()].clone()).collect();
        let superedges: Vec<Superedge> = self
            .superedges
            .iter()
            .filter_map(|e| {
                Some(Superedge {
                    from: *remap.get(&e.from)?,
                    relations: e.relations.clone(),
                    to: *remap.get(&e.to)?,
                })
            })
            .collect();
        let entity_index = members
            .iter()
            .enumerate()
            .flat_map(|(i, m)| m.iter().map(move |e| (e.clone(), SupernodeId(i as u32))))
            .collect();
        let kept_entities: Vec<&EntityId> = members.iter().flatten().collect();
        let origin = self
            .origin
            .induced_subgraph(kept_entities.into_iter().filter(|e| self.origin.contains(e)))
            .expect("retained entities come from the origin graph");
        let mut graph = QuestionSubgraph {
            members,
            superedges,
            topics: self.topics.iter().map(|(e, s)| (e.clone(), remap[s])).collect(),
            entity_index,
            labels: self.labels.clone(),
            origin,
            adjacency: Vec::new(),
            clustered: self.clustered,
        };
        graph.rebuild_adjacency();
        graph
    }

    /// Attach an edge from `node` to `neighbor` found in the source graph.
    /// The caller guarantees every member of `node` carries the triple.
    /// `direction` is `Tail` when `node` holds the head. Returns the step
    /// taken from `node`, or `None` when the neighbour sits in a multi-member
    /// supernode that no existing superedge covers.
    pub fn attach(
        &mut self,
        node: SupernodeId,
        relation: &str,
        neighbor: &EntityId,
        direction: Direction,
        labels: &HashMap<String, String>,
    ) -> Option<(usize, SupernodeId, StepDirection)> {
        let other = self.ensure_entity(neighbor, labels);
        let (head, tail, step) = match direction {
            Direction::Tail => (node, other, StepDirection::Forward),
            Direction::Head => (other, node, StepDirection::Backward),
        };
        if let Some(i) = self
            .superedges
            .iter()
            .position(|e| e.from == head && e.to == tail && e.relations.contains(relation))
        {
            return Some((i, other, step));
        }
        if self.members[other.index()].len() > 1 {
            return None;
        }
        self.superedges.push(Superedge {
            from: head,
            relations: BTreeSet::from([relation.to_owned()]),
            to: tail,
        });
        let edge = self.superedges.len() - 1;
        if head != tail {
            self.adjacency[head.index()].push(Adjacent {
                edge,
                neighbor: tail,
                direction: StepDirection::Forward,
            });
            self.adjacency[tail.index()].push(Adjacent {
                edge,
                neighbor: head,
                direction: StepDirection::Backward,
            });
        }
        Some((edge, other, step))
    }

    fn ensure_entity(&mut self, entity: &EntityId, labels: &HashMap<String, String>) -> SupernodeId {
        if let Some(s) = self.entity_index.get(entity) {
            return *s;
        }
        let id = SupernodeId(self.members.len() as u32);
        self.members.push(BTreeSet::from([entity.clone()]));
        self.adjacency.push(Vec::new());
        self.entity_index.insert(entity.clone(), id);
        if let Some(l) = labels.get(entity.as_str()) {
            self.labels.insert(entity.to_string(), l.clone());
        }
        id
    }
}

fn dedup_topics(topics: &[EntityId]) -> Vec<EntityId> {
    let mut seen = HashSet::new();
    topics.iter().filter(|t| seen.insert((*t).clone())).cloned().collect()
}

/// Collect the `d_max`-hop undirected neighbourhood of every topic from
/// `source` and return the induced subgraph over it, unclustered.
pub fn build_question_subgraph(source: &dyn KgSource, topics: &[EntityId], d_max: usize) -> Result<QuestionSubgraph> {
    if topics.is_empty() {
        return Err(Error::Precondition("at least one topic entity is required".into()));
    }
    if d_max == 0 {
        return Err(Error::Precondition("D_max must be at least 1".into()));
    }
    let mut fetched: HashMap<EntityId, Vec<NeighborRecord>> = HashMap::new();
    let fetch = |e: &EntityId, fetched: &mut HashMap<EntityId, Vec<NeighborRecord>>| -> Result<()> {
        if !fetched.contains_key(e) {
            let n = source.neighbors(e)?;
            fetched.insert(e.clone(), n);
        }
        Ok(())
    };

    let mut covered: BTreeSet<EntityId> = BTreeSet::new();
    for topic in dedup_topics(topics) {
        if !source.contains(&topic)? {
            return Err(Error::Build { entity: topic.to_string() });
        }
        let mut depth: HashMap<EntityId, usize> = HashMap::from([(topic.clone(), 0)]);
        let mut queue = VecDeque::from([topic.clone()]);
        while let Some(u) = queue.pop_front() {
            let du = depth[&u];
            if du == d_max {
                continue;
            }
            fetch(&u, &mut fetched)?;
            for rec in &fetched[&u] {
                if !depth.contains_key(&rec.neighbor) {
                    depth.insert(rec.neighbor.clone(), du + 1);
                    queue.push_back(rec.neighbor.clone());
                }
            }
        }
        covered.extend(depth.into_keys());
    }

    // Boundary entities still need their incident triples so that edges
    // between two boundary entities are not lost.
    let mut triples = Vec::new();
    for e in &covered {
        fetch(e, &mut fetched)?;
        for rec in &fetched[e] {
            if covered.contains(&rec.neighbor) {
                triples.push(rec.to_triple(e));
            }
        }
    }

    let ids: Vec<&str> = covered.iter().map(EntityId::as_str).collect();
    let names = source.labels(&ids)?;
    let labels: HashMap<String, String> = ids
        .iter()
        .zip(names)
        .filter(|(_, name)| name != UNNAMED_ENTITY)
        .map(|(id, name)| (id.to_string(), name))
        .collect();

    let origin = KnowledgeGraph::with_entities(covered, triples, labels);
    QuestionSubgraph::unclustered(origin, topics)
}

/// Merge parallel triples into relation-set superedges and merge non-topic
/// entities whose neighbourhood signatures coincide.
///
/// The signature of a supernode is the set of `(neighbor supernode, relation,
/// direction)` over all of its member triples. Merging repeats until no two
/// non-topic supernodes share a non-empty signature. Topic entities stay
/// singletons.
pub fn cluster_supernodes(graph: &QuestionSubgraph) -> QuestionSubgraph {
    let origin = &graph.origin;
    let entities: Vec<&EntityId> = origin.entities().iter().collect();
    let index: HashMap<&EntityId, usize> = entities.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let topic_set: HashSet<usize> = graph.topics.iter().map(|(e, _)| index[e]).collect();

    // group[i] = representative (smallest entity index) of entity i's class
    let mut group: Vec<usize> = (0..entities.len()).collect();
    loop {
        let mut signatures: BTreeMap<usize, BTreeSet<(usize, &str, Direction)>> = BTreeMap::new();
        for t in origin.triples() {
            let (h, tl) = (index[&t.head], index[&t.tail]);
            signatures
                .entry(group[h])
                .or_default()
                .insert((group[tl], t.relation.as_str(), Direction::Tail));
            signatures
                .entry(group[tl])
                .or_default()
                .insert((group[h], t.relation.as_str(), Direction::Head));
        }
        let mut by_signature: BTreeMap<&BTreeSet<(usize, &str, Direction)>, Vec<usize>> = BTreeMap::new();
        for (rep, sig) in &signatures {
            if topic_set.contains(rep) || sig.is_empty() {
                continue;
            }
            by_signature.entry(sig).or_default().push(*rep);
        }
        let mut relabel: HashMap<usize, usize> = HashMap::new();
        for reps in by_signature.values().filter(|r| r.len() > 1) {
            let target = *reps.iter().min().expect("non-empty group");
            for &r in reps {
                relabel.insert(r, target);
            }
        }
        if relabel.is_empty() {
            break;
        }
        for g in group.iter_mut() {
            if let Some(&t) = relabel.get(g) {
                *g = t;
            }
        }
    }

    let reps: BTreeSet<usize> = group.iter().copied().collect();
    let supernode_of_rep: HashMap<usize, SupernodeId> = reps
        .iter()
        .enumerate()
        .map(|(i, r)| (*r, SupernodeId(i as u32)))
        .collect();
    let mut members = vec![BTreeSet::new(); reps.len()];
    let mut entity_index = HashMap::new();
    for (i, e) in entities.iter().enumerate() {
        let s = supernode_of_rep[&group[i]];
        members[s.index()].insert((*e).clone());
        entity_index.insert((*e).clone(), s);
    }
    let mut edge_relations: BTreeMap<(SupernodeId, SupernodeId), BTreeSet<String>> = BTreeMap::new();
    for t in origin.triples() {
        edge_relations
            .entry((entity_index[&t.head], entity_index[&t.tail]))
            .or_default()
            .insert(t.relation.clone());
    }
    let superedges = edge_relations
        .into_iter()
        .map(|((from, to), relations)| Superedge { from, relations, to })
        .collect();
    let mut clustered = QuestionSubgraph {
        members,
        superedges,
        topics: graph
            .topics
            .iter()
            .map(|(e, _)| (e.clone(), entity_index[e]))
            .collect(),
        entity_index,
        labels: graph.labels.clone(),
        origin: graph.origin.clone(),
        adjacency: Vec::new(),
        clustered: true,
    };
    clustered.rebuild_adjacency();
    clustered
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub subgraph: QuestionSubgraph,
    pub warnings: Vec<String>,
}

/// Supernodes lying on at least one simple `source`–`target` path of length
/// at most `max_len`.
pub fn nodes_on_short_paths(
    graph: &QuestionSubgraph,
    source: SupernodeId,
    target: SupernodeId,
    max_len: usize,
) -> BTreeSet<SupernodeId> {
    let from_s = graph.distances_from(source);
    let from_t = graph.distances_from(target);
    let admissible: Vec<bool> = from_s
        .iter()
        .zip(&from_t)
        .map(|(a, b)| matches!((a, b), (Some(a), Some(b)) if a + b <= max_len))
        .collect();
    let mut on_path = BTreeSet::new();
    if !admissible[source.index()] {
        return on_path;
    }
    let mut stack = vec![source];
    let mut visiting = vec![false; graph.supernode_count()];
    visiting[source.index()] = true;
    walk(graph, target, max_len, &from_t, &admissible, &mut stack, &mut visiting, &mut on_path);
    on_path
}

#[allow(clippy::too_many_arguments)]
fn walk(
    graph: &QuestionSubgraph,
    target: SupernodeId,
    max_len: usize,
    to_target: &[Option<usize>],
    admissible: &[bool],
    stack: &mut Vec<SupernodeId>,
    visiting: &mut [bool],
    on_path: &mut BTreeSet<SupernodeId>,
) {
    let here = *stack.last().expect("stack holds the source");
    if here == target {
        on_path.extend(stack.iter().copied());
        return;
    }
    let used = stack.len() - 1;
    for adj in graph.adjacent(here) {
        let next = adj.neighbor;
        if visiting[next.index()] || !admissible[next.index()] {
            continue;
        }
        // Remaining budget must still reach the target.
        match to_target[next.index()] {
            Some(d) if used + 1 + d <= max_len => {}
            _ => continue,
        }
        visiting[next.index()] = true;
        stack.push(next);
        walk(graph, target, max_len, to_target, admissible, stack, visiting, on_path);
        stack.pop();
        visiting[next.index()] = false;
    }
}

/// Keep only supernodes on simple inter-topic paths of length ≤ 2·`d_max`.
///
/// With a single topic the graph is returned unchanged. A topic that reaches
/// no other topic keeps its own `d_max` ball, and a warning is recorded.
pub fn reduce_by_topic_paths(graph: &QuestionSubgraph, d_max: usize) -> Reduction {
    let topics: Vec<SupernodeId> = graph.topics.iter().map(|(_, s)| *s).collect();
    if topics.len() < 2 {
        return Reduction {
            subgraph: graph.clone(),
            warnings: Vec::new(),
        };
    }
    let bound = 2 * d_max;
    let mut keep = BTreeSet::new();
    let mut connected = vec![false; topics.len()];
    for i in 0..topics.len() {
        for j in i + 1..topics.len() {
            let nodes = nodes_on_short_paths(graph, topics[i], topics[j], bound);
            if !nodes.is_empty() {
                connected[i] = true;
                connected[j] = true;
                keep.extend(nodes);
            }
        }
    }
    let mut warnings = Vec::new();
    for (i, &t) in topics.iter().enumerate() {
        if connected[i] {
            continue;
        }
        warnings.push(format!(
            "topic {} has no path of length <= {bound} to another topic; keeping its {d_max}-hop ball",
            graph.topics[i].0
        ));
        for (node, d) in graph.distances_from(t).into_iter().enumerate() {
            if d.is_some_and(|d| d <= d_max) {
                keep.insert(SupernodeId(node as u32));
            }
        }
    }
    Reduction {
        subgraph: graph.retain(&keep),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kg(triples: &[(&str, &str, &str)]) -> KnowledgeGraph {
        KnowledgeGraph::new(
            triples.iter().map(|(h, r, t)| Triple::new(*h, *r, *t)),
            HashMap::new(),
        )
    }

    fn entity_set(g: &QuestionSubgraph) -> BTreeSet<EntityId> {
        g.supernodes().flat_map(|s| g.members(s).iter().cloned()).collect()
    }

    #[test]
    fn one_hop_ball() {
        let g = kg(&[("a", "r", "b"), ("c", "r", "a"), ("b", "r", "d"), ("e", "r", "f")]);
        let sub = build_question_subgraph(&g, &["a".into()], 1).unwrap();
        let want: BTreeSet<EntityId> = ["a", "b", "c"].iter().map(|s| EntityId::from(*s)).collect();
        assert_eq!(entity_set(&sub), want);
        assert_eq!(sub.origin().triples().len(), 2);
    }

    #[test]
    fn far_topics_give_disjoint_balls() {
        let g = kg(&[("t1", "r", "x1"), ("x1", "r", "x2"), ("x2", "r", "x3"), ("x3", "r", "x4"), ("x4", "r", "t2")]);
        let sub = build_question_subgraph(&g, &["t1".into(), "t2".into()], 2).unwrap();
        let want: BTreeSet<EntityId> = ["t1", "x1", "x2", "x3", "x4", "t2"].iter().map(|s| EntityId::from(*s)).collect();
        assert_eq!(entity_set(&sub), want);
        // x2-x3 lies between the balls' boundaries and is still induced.
        assert_eq!(sub.origin().triples().len(), 5);
    }

    #[test]
    fn missing_topic_is_a_build_error() {
        let g = kg(&[("a", "r", "b")]);
        let err = build_question_subgraph(&g, &["zz".into()], 1).unwrap_err();
        assert!(matches!(err, Error::Build { ref entity } if entity == "zz"));
    }

    #[test]
    fn parallel_triples_share_a_superedge() {
        let g = kg(&[("france", "contained_by", "europe"), ("france", "partOf", "europe")]);
        let sub = build_question_subgraph(&g, &["france".into()], 1).unwrap();
        let c = cluster_supernodes(&sub);
        assert_eq!(c.superedges().len(), 1);
        let rels: Vec<&str> = c.superedges()[0].relations.iter().map(String::as_str).collect();
        assert_eq!(rels, vec!["contained_by", "partOf"]);
    }

    #[test]
    fn championship_entities_merge() {
        let g = kg(&[
            ("lou", "sports.mascot.team", "giants"),
            ("giants", "sports.sports_team.championships", "ws2014"),
            ("giants", "sports.sports_team.championships", "ws2012"),
            ("giants", "sports.sports_team.championships", "ws2010"),
        ]);
        let sub = build_question_subgraph(&g, &["lou".into()], 2).unwrap();
        let c = cluster_supernodes(&sub);
        assert_eq!(c.supernode_count(), 3);
        let ws = c.supernode_of(&"ws2014".into()).unwrap();
        assert_eq!(c.members(ws).len(), 3);
        assert_eq!(c.supernode_of(&"ws2010".into()), Some(ws));
    }

    #[test]
    fn distinct_signatures_cluster_to_identity() {
        let g = kg(&[("a", "r1", "b"), ("a", "r2", "c"), ("c", "r3", "d")]);
        let sub = build_question_subgraph(&g, &["a".into()], 2).unwrap();
        let c = cluster_supernodes(&sub);
        assert_eq!(c.supernode_count(), sub.supernode_count());
        assert_eq!(c.superedges().len(), sub.superedges().len());
    }

    #[test]
    fn topics_never_merge() {
        let g = kg(&[("t1", "r", "hub"), ("t2", "r", "hub")]);
        let sub = build_question_subgraph(&g, &["t1".into(), "t2".into()], 1).unwrap();
        let c = cluster_supernodes(&sub);
        assert_ne!(c.topic_supernode(&"t1".into()), c.topic_supernode(&"t2".into()));
        assert_eq!(c.supernode_count(), 3);
    }

    #[test]
    fn reduction_drops_dangling_branch() {
        let g = kg(&[
            ("t1", "r", "m1"),
            ("m1", "r", "m2"),
            ("m2", "r", "t2"),
            ("m1", "s", "d1"),
            ("d1", "s", "d2"),
        ]);
        let sub = build_question_subgraph(&g, &["t1".into(), "t2".into()], 2).unwrap();
        let red = reduce_by_topic_paths(&sub, 2);
        let want: BTreeSet<EntityId> = ["t1", "m1", "m2", "t2"].iter().map(|s| EntityId::from(*s)).collect();
        assert_eq!(entity_set(&red.subgraph), want);
        assert!(red.warnings.is_empty());
        assert_eq!(red.subgraph.origin().triples().len(), 3);
    }

    #[test]
    fn single_topic_reduction_is_identity() {
        let g = kg(&[("t", "r", "a"), ("a", "r", "b")]);
        let sub = build_question_subgraph(&g, &["t".into()], 2).unwrap();
        let red = reduce_by_topic_paths(&sub, 2);
        assert_eq!(entity_set(&red.subgraph), entity_set(&sub));
        assert_eq!(red.subgraph.superedges(), sub.superedges());
    }

    #[test]
    fn disconnected_topics_keep_their_balls() {
        let g = kg(&[("t1", "r", "a"), ("t2", "r", "b")]);
        let sub = build_question_subgraph(&g, &["t1".into(), "t2".into()], 1).unwrap();
        let red = reduce_by_topic_paths(&sub, 1);
        assert_eq!(entity_set(&red.subgraph).len(), 4);
        assert_eq!(red.warnings.len(), 2);
    }

    #[test]
    fn attach_adds_new_supernode() {
        let g = kg(&[("t", "r", "a")]);
        let mut sub = build_question_subgraph(&g, &["t".into()], 1).unwrap();
        let before = sub.supernode_count();
        let a = sub.supernode_of(&"a".into()).unwrap();
        let (edge, z, dir) = sub.attach(a, "r2", &"z".into(), Direction::Tail, &HashMap::new()).unwrap();
        assert_eq!(sub.supernode_count(), before + 1);
        assert_eq!(sub.superedge(edge).to, z);
        assert_eq!(dir, StepDirection::Forward);
        // An existing triple reuses its superedge.
        let t = sub.supernode_of(&"t".into()).unwrap();
        let (again, _, dir) = sub.attach(a, "r", &"t".into(), Direction::Head, &HashMap::new()).unwrap();
        assert_eq!(again, 0);
        assert_eq!(dir, StepDirection::Backward);
        assert_eq!(sub.superedge(again).from, t);
    }
}
