//! Synthetic workloads shared by the criterion benches.

use std::collections::HashMap;

use pog_core::{EntityId, KnowledgeGraph, QuestionSubgraph, Triple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RELATIONS: [&str; 6] = [
    "location.location.containedby",
    "people.person.nationality",
    "sports.sports_team.championships",
    "film.film.directed_by",
    "common.topic.notable_types",
    "music.artist.genre",
];

/// Random graph with `nodes` entities and `edges` triples; entity `e0` ..
/// `e{topics-1}` are the topics.
pub fn random_subgraph(seed: u64, nodes: usize, edges: usize, topics: usize) -> QuestionSubgraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<EntityId> = (0..nodes).map(|i| EntityId::new(format!("e{i}"))).collect();
    let triples: Vec<Triple> = (0..edges)
        .map(|_| {
            let h = rng.random_range(0..nodes);
            let t = rng.random_range(0..nodes);
            Triple::new(ids[h].clone(), RELATIONS[rng.random_range(0..RELATIONS.len())], ids[t].clone())
        })
        .collect();
    let labels: HashMap<String, String> = ids.iter().map(|e| (e.to_string(), format!("Entity {e}"))).collect();
    let kg = KnowledgeGraph::with_entities(ids.clone(), triples, labels);
    QuestionSubgraph::unclustered(kg, &ids[..topics.min(nodes)]).expect("topics come from the graph")
}
