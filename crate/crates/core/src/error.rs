use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("transport error: {0}")]
    Transport(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("topic extraction failed; raw reply: {raw}")]
    Extraction { raw: String },

    #[error("entity alignment failed: {0}")]
    Alignment(String),

    #[error("subgraph build failed: topic entity {entity} is not in the knowledge graph")]
    Build { entity: String },

    #[error("question analysis failed; raw reply: {raw}")]
    Analysis { raw: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("llm failure ({purpose}): {message}")]
    Llm { purpose: String, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
