#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use pog_core::harness::Status;
use pog_core::kg::{load_labels, load_triples};
use pog_core::{
    load_dataset, run_question, HashingEmbedder, KnowledgeGraph, MockBackend, MockEntry, Phase, Pipeline, PogConfig,
    PromptLibrary, QuestionRecord, QuestionTrace,
};

pub const FIXTURES: [&str; 6] = ["lou_seal", "lejre", "falkland", "supplement", "expand", "final_fallback"];

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub struct Fixture {
    pub name: String,
    pub kg: Arc<KnowledgeGraph>,
    pub records: Vec<QuestionRecord>,
    pub script: Vec<MockEntry>,
    pub config: PogConfig,
}

impl Fixture {
    pub fn load(name: &str) -> Self {
        let dir = fixture_dir(name);
        let triples = load_triples(dir.join("kg.tsv")).expect("kg.tsv");
        let labels = load_labels(dir.join("labels.tsv")).expect("labels.tsv");
        let records = load_dataset(dir.join("dataset.jsonl")).expect("dataset.jsonl");
        let script: Vec<MockEntry> =
            serde_json::from_str(&fs::read_to_string(dir.join("script.json")).unwrap()).expect("script.json");
        let config: PogConfig =
            serde_json::from_str(&fs::read_to_string(dir.join("config.json")).unwrap()).expect("config.json");
        Self {
            name: name.to_owned(),
            kg: Arc::new(KnowledgeGraph::new(triples, labels)),
            records,
            script,
            config,
        }
    }

    pub fn pipeline(&self) -> Pipeline {
        self.pipeline_with(self.config.clone())
    }

    pub fn pipeline_with(&self, config: PogConfig) -> Pipeline {
        Pipeline {
            source: self.kg.clone(),
            llm: Arc::new(MockBackend::new(self.script.clone())),
            embedder: Arc::new(HashingEmbedder::default()),
            prompts: PromptLibrary::builtin(),
            config,
            entity_index: None,
            use_gold_topics: true,
            dump_subgraphs: None,
        }
    }

    pub fn run(&self) -> QuestionTrace {
        run_question(&self.records[0], &self.pipeline())
    }
}

pub fn assert_answered(trace: &QuestionTrace, phase: Phase) {
    assert_eq!(trace.status, Status::Answered, "error: {:?}\nnotes: {:?}", trace.error, trace.notes);
    assert_eq!(trace.phase, Some(phase), "notes: {:?}", trace.notes);
}

pub mod oracle;
pub mod population;
