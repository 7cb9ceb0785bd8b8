//! Source knowledge graph access.
//!
//! [`KnowledgeGraph`] is an immutable in-memory triple store with a per-entity
//! adjacency index. [`SparqlClient`] answers the same questions against a
//! remote endpoint. Both implement [`KgSource`], so the rest of the engine never
//! cares where triples come from.

mod sparql;
mod store;

pub use sparql::{label_query, one_hop_named_query, one_hop_query, SparqlClient};
pub use store::{load_labels, load_triples, KnowledgeGraph};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Label returned for ids without a stored textual description.
pub const UNNAMED_ENTITY: &str = "Unnamed Entity";

/// Opaque entity key, e.g. a Freebase machine id like `m.0f8l9c`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: String,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: impl Into<EntityId>, relation: impl Into<String>, tail: impl Into<EntityId>) -> Self {
        Self {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }
}

/// Which end of the triple the *neighbor* occupies.
///
/// `Tail` means the query entity is the head of the triple and the neighbor is
/// its tail; `Head` is the reverse. Serialized exactly as the SPARQL `BIND`
/// values `"tail"` / `"head"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Tail,
    Head,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Tail => "tail",
            Direction::Head => "head",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "tail" => Some(Direction::Tail),
            "head" => Some(Direction::Head),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeighborRecord {
    pub relation: String,
    pub neighbor: EntityId,
    pub direction: Direction,
}

impl NeighborRecord {
    /// Rebuild the stored triple this record was derived from.
    pub fn to_triple(&self, query: &EntityId) -> Triple {
        match self.direction {
            Direction::Tail => Triple::new(query.clone(), self.relation.clone(), self.neighbor.clone()),
            Direction::Head => Triple::new(self.neighbor.clone(), self.relation.clone(), query.clone()),
        }
    }
}

/// Read access to a knowledge graph, local or remote.
pub trait KgSource: Send + Sync {
    /// Every triple incident to `entity`, once per stored orientation.
    fn neighbors(&self, entity: &EntityId) -> Result<Vec<NeighborRecord>>;

    /// Short textual description of an entity or relation id.
    fn label(&self, id: &str) -> Result<String>;

    /// Whether `entity` exists. Remote sources treat an entity without any
    /// incident triple as absent.
    fn contains(&self, entity: &EntityId) -> Result<bool> {
        Ok(!self.neighbors(entity)?.is_empty())
    }

    /// Labels for many ids at once. Remote sources may batch.
    fn labels(&self, ids: &[&str]) -> Result<Vec<String>> {
        ids.iter().map(|id| self.label(id)).collect()
    }
}
