//! Synthetic path populations for pruning tests.

use std::collections::HashMap;
use std::sync::Arc;

use pog_core::explore::{EntityPath, PathOrigin, PathStep};
use pog_core::subgraph::StepDirection;
use pog_core::{EntityId, KnowledgeGraph, LlmSession, MockBackend, MockEntry, Purpose, QuestionSubgraph, Triple};
use rand::Rng;

const WORDS: [&str; 16] = [
    "harbor", "granite", "violet", "orchard", "falcon", "meadow", "copper", "lantern", "summit", "willow", "ember",
    "canyon", "saffron", "glacier", "thistle", "beacon",
];

const RELATIONS: [&str; 8] = [
    "people.person.place_of_birth",
    "location.location.containedby",
    "sports.sports_team.championships",
    "film.film.directed_by",
    "music.artist.genre",
    "organization.organization.founders",
    "book.written_work.author",
    "time.event.locations",
];

pub struct Population {
    pub graph: QuestionSubgraph,
    pub paths: Vec<EntityPath>,
}

fn build(triples: Vec<Triple>, labels: HashMap<String, String>, parent: &[Option<usize>]) -> Population {
    let kg = KnowledgeGraph::new(triples.clone(), labels);
    let graph = QuestionSubgraph::unclustered(kg, &["n0".into()]).expect("root is present");
    // Triple i attaches node i + 1 to its parent.
    let mut paths = Vec::new();
    for node in 1..parent.len() {
        let mut chain = Vec::new();
        let mut cur = node;
        while let Some(p) = parent[cur] {
            chain.push(cur - 1);
            cur = p;
        }
        chain.reverse();
        let steps = chain
            .iter()
            .map(|&i| {
                let t = &triples[i];
                PathStep {
                    from: graph.supernode_of(&t.head).unwrap(),
                    edge: i,
                    to: graph.supernode_of(&t.tail).unwrap(),
                    direction: StepDirection::Forward,
                }
            })
            .collect();
        paths.push(EntityPath {
            anchors: vec![graph.topic_supernode(&EntityId::from("n0")).unwrap()],
            anchor_positions: vec![0],
            steps,
            origin: PathOrigin::Topic,
        });
    }
    Population { graph, paths }
}

/// Random tree of depth at most 3 rooted at `n0`; every root-to-node walk is
/// one path, so prefixes are shared.
pub fn random_tree(rng: &mut impl Rng, paths: usize) -> Population {
    let mut parent = vec![None];
    let mut depth = vec![0usize];
    let mut triples = Vec::new();
    let mut labels = HashMap::from([("n0".to_owned(), "Root Topic".to_owned())]);
    for node in 1..=paths {
        let candidates: Vec<usize> = (0..node).filter(|&i| depth[i] < 3).collect();
        let p = candidates[rng.random_range(0..candidates.len())];
        parent.push(Some(p));
        depth.push(depth[p] + 1);
        let relation = RELATIONS[rng.random_range(0..RELATIONS.len())];
        triples.push(Triple::new(format!("n{p}"), relation, format!("n{node}")));
        let label = format!(
            "{} {}",
            WORDS[rng.random_range(0..WORDS.len())],
            WORDS[rng.random_range(0..WORDS.len())]
        );
        labels.insert(format!("n{node}"), label);
    }
    build(triples, labels, &parent)
}

/// `legs` disjoint chains of `len` steps from the root; only full-length
/// walks are returned.
pub fn spider(legs: usize, len: usize) -> Population {
    let mut parent = vec![None];
    let mut triples = Vec::new();
    let mut labels = HashMap::from([("n0".to_owned(), "Root Topic".to_owned())]);
    let mut node = 0;
    for leg in 0..legs {
        let mut prev = 0;
        for step in 0..len {
            node += 1;
            parent.push(Some(prev));
            let relation = RELATIONS[(leg + step) % RELATIONS.len()];
            triples.push(Triple::new(format!("n{prev}"), relation, format!("n{node}")));
            labels.insert(
                format!("n{node}"),
                format!("{} {} {leg}", WORDS[(leg + step) % WORDS.len()], WORDS[(leg * 7 + step) % WORDS.len()]),
            );
            prev = node;
        }
    }
    let mut pop = build(triples, labels, &parent);
    pop.paths.retain(|p| p.len() == len);
    pop
}

/// Session whose precise-selection replies list indices `0..n` in order.
pub fn ranking_session(n: usize) -> LlmSession {
    let list: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let mock = MockBackend::new(vec![
        MockEntry::new(Purpose::PreciseSelect, format!("[{}]", list.join(", "))).repeating(),
    ]);
    LlmSession::new(Arc::new(mock), Default::default())
}
