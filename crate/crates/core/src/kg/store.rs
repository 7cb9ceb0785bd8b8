use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::{Direction, EntityId, KgSource, NeighborRecord, Triple, UNNAMED_ENTITY};
use crate::error::{Error, Result};

/// In-memory triple store. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    entities: BTreeSet<EntityId>,
    triples: Vec<Triple>,
    relations: BTreeSet<String>,
    labels: HashMap<String, String>,
    outgoing: HashMap<EntityId, Vec<usize>>,
    incoming: HashMap<EntityId, Vec<usize>>,
}

impl KnowledgeGraph {
    /// Build a store from triples. Duplicate triples are dropped, keeping the
    /// first occurrence. Labels may mention ids that are not in the graph.
    pub fn new(triples: impl IntoIterator<Item = Triple>, labels: HashMap<String, String>) -> Self {
        Self::with_entities(std::iter::empty(), triples, labels)
    }

    /// Like [`KnowledgeGraph::new`] but also registers entities that have no
    /// incident triple.
    pub fn with_entities(
        entities: impl IntoIterator<Item = EntityId>,
        triples: impl IntoIterator<Item = Triple>,
        labels: HashMap<String, String>,
    ) -> Self {
        let mut graph = KnowledgeGraph {
            entities: entities.into_iter().collect(),
            labels,
            ..Default::default()
        };
        let mut seen = HashSet::new();
        for triple in triples {
            if !seen.insert(triple.clone()) {
                continue;
            }
            let idx = graph.triples.len();
            graph.entities.insert(triple.head.clone());
            graph.entities.insert(triple.tail.clone());
            graph.relations.insert(triple.relation.clone());
            graph.outgoing.entry(triple.head.clone()).or_default().push(idx);
            graph.incoming.entry(triple.tail.clone()).or_default().push(idx);
            graph.triples.push(triple);
        }
        graph
    }

    pub fn entities(&self) -> &BTreeSet<EntityId> {
        &self.entities
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn relations(&self) -> &BTreeSet<String> {
        &self.relations
    }

    pub fn contains(&self, entity: &EntityId) -> bool {
        self.entities.contains(entity)
    }

    pub fn outgoing(&self, entity: &EntityId) -> impl Iterator<Item = &Triple> {
        self.outgoing
            .get(entity)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    pub fn incoming(&self, entity: &EntityId) -> impl Iterator<Item = &Triple> {
        self.incoming
            .get(entity)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    /// Stored description, if any, without the fallback rules of [`KgSource::label`].
    pub fn raw_label(&self, id: &str) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn label_of(&self, id: &str) -> String {
        match self.labels.get(id) {
            Some(label) => label.clone(),
            None if self.relations.contains(id) => id.to_owned(),
            None => UNNAMED_ENTITY.to_owned(),
        }
    }

    pub fn label_map(&self) -> &HashMap<String, String> {
        &self.labels
    }

    /// 1-hop neighbourhood of `entity`. Unknown entities yield an empty list.
    pub fn neighbors_of(&self, entity: &EntityId) -> Vec<NeighborRecord> {
        let out = self.outgoing(entity).map(|t| NeighborRecord {
            relation: t.relation.clone(),
            neighbor: t.tail.clone(),
            direction: Direction::Tail,
        });
        let inc = self.incoming(entity).map(|t| NeighborRecord {
            relation: t.relation.clone(),
            neighbor: t.head.clone(),
            direction: Direction::Head,
        });
        out.chain(inc).collect()
    }

    /// The subgraph induced by `entity_set`: every triple whose endpoints both
    /// lie in the set, with labels restricted to the surviving ids.
    pub fn induced_subgraph<'a>(&self, entity_set: impl IntoIterator<Item = &'a EntityId>) -> Result<KnowledgeGraph> {
        let keep: BTreeSet<EntityId> = entity_set.into_iter().cloned().collect();
        if let Some(missing) = keep.iter().find(|e| !self.entities.contains(*e)) {
            return Err(Error::Precondition(format!(
                "entity {missing} is not part of the graph"
            )));
        }
        let triples: Vec<Triple> = self
            .triples
            .iter()
            .filter(|t| keep.contains(&t.head) && keep.contains(&t.tail))
            .cloned()
            .collect();
        let relations: HashSet<&str> = triples.iter().map(|t| t.relation.as_str()).collect();
        let labels = self
            .labels
            .iter()
            .filter(|(id, _)| keep.contains(&EntityId::new(id.as_str())) || relations.contains(id.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(KnowledgeGraph::with_entities(keep, triples, labels))
    }
}

impl KgSource for KnowledgeGraph {
    fn neighbors(&self, entity: &EntityId) -> Result<Vec<NeighborRecord>> {
        Ok(self.neighbors_of(entity))
    }

    fn label(&self, id: &str) -> Result<String> {
        Ok(self.label_of(id))
    }

    fn contains(&self, entity: &EntityId) -> Result<bool> {
        Ok(KnowledgeGraph::contains(self, entity))
    }
}

/// Parse a tab-separated triple file: `head \t relation \t tail` per line.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_triples(path: impl AsRef<Path>) -> Result<Vec<Triple>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut triples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 || cols.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: n + 1,
                message: "expected `head<TAB>relation<TAB>tail`".into(),
            });
        }
        triples.push(Triple::new(cols[0].trim(), cols[1].trim(), cols[2].trim()));
    }
    Ok(triples)
}

/// Parse a companion label file: `id \t label` per line.
pub fn load_labels(path: impl AsRef<Path>) -> Result<HashMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut labels = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((id, label)) = line.split_once('\t') else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: n + 1,
                message: "expected `id<TAB>label`".into(),
            });
        };
        labels.insert(id.trim().to_owned(), label.trim().to_owned());
    }
    Ok(labels)
}
