//! Knowledge-graph question answering by guided path exploration.
//!
//! A question is linked to topic entities, decomposed by a language model, and
//! answered from reasoning paths found in a clustered subgraph around those
//! entities. Paths are pruned by embedding similarity and model ranking, then
//! checked for sufficiency.

pub mod analysis;
pub mod answer;
pub mod config;
pub mod embed;
pub mod error;
pub mod explore;
pub mod harness;
pub mod kg;
pub mod linker;
pub mod llm;
pub mod prompts;
pub mod prune;
pub mod subgraph;

pub use analysis::{analyze_question, derive_predicted_depth, parse_indicator, Indicator, IndicatorToken, QuestionAnalysis, TopicLabel};
pub use answer::{AnswerOutcome, EvidenceSource, Verdict};
pub use config::PogConfig;
pub use embed::{cosine, Embedder, Embedding, HashingEmbedder, HttpEmbedder};
pub use error::{Error, Result};
pub use explore::{entity_path_find, EntityPath, Phase, PathOrigin, PathStep};
pub use harness::{hits_at_1, load_dataset, run_dataset, run_question, Pipeline, QuestionRecord, QuestionTrace, RunMetrics};
pub use kg::{Direction, EntityId, KgSource, KnowledgeGraph, SparqlClient, Triple};
pub use linker::{EntityIndex, TopicEntity};
pub use llm::{HttpBackend, LlmBackend, LlmSession, MockBackend, MockEntry, Purpose};
pub use prompts::PromptLibrary;
pub use prune::{apply_strategy, BeamWidths, PruningStrategy, QuestionContext};
pub use subgraph::{build_question_subgraph, cluster_supernodes, reduce_by_topic_paths, QuestionSubgraph, SupernodeId};
