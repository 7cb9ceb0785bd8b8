//! Language-model backends, per-question sessions and call accounting.

mod http;
mod mock;

pub use http::HttpBackend;
pub use mock::{MockBackend, MockEntry};

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const EXPLORATION_TEMPERATURE: f32 = 0.4;
pub const REASONING_TEMPERATURE: f32 = 0.0;
pub const DEFAULT_MAX_TOKENS: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Analysis,
    Supplement,
    PreciseSelect,
    Summarize,
    Evaluate,
    Generate,
    Extract,
}

impl Purpose {
    pub const ALL: [Purpose; 7] = [
        Purpose::Analysis,
        Purpose::Supplement,
        Purpose::PreciseSelect,
        Purpose::Summarize,
        Purpose::Evaluate,
        Purpose::Generate,
        Purpose::Extract,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Purpose::Analysis => "analysis",
            Purpose::Supplement => "supplement",
            Purpose::PreciseSelect => "precise_select",
            Purpose::Summarize => "summarize",
            Purpose::Evaluate => "evaluate",
            Purpose::Generate => "generate",
            Purpose::Extract => "extract",
        }
    }

    /// Exploration-time calls sample at 0.4, reasoning calls are greedy.
    pub fn default_temperature(self) -> f32 {
        match self {
            Purpose::Analysis | Purpose::Supplement | Purpose::PreciseSelect => EXPLORATION_TEMPERATURE,
            Purpose::Summarize | Purpose::Evaluate | Purpose::Generate | Purpose::Extract => {
                REASONING_TEMPERATURE
            }
        }
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub prompt: String,
    pub temperature: f32,
    pub max_tokens: u32,
    pub purpose: Purpose,
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String>;
}

/// Temperature and token settings applied to every call of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmSettings {
    pub exploration_temperature: f32,
    pub reasoning_temperature: f32,
    pub max_tokens: u32,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            exploration_temperature: EXPLORATION_TEMPERATURE,
            reasoning_temperature: REASONING_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

impl LlmSettings {
    pub fn temperature_for(&self, purpose: Purpose) -> f32 {
        if purpose.default_temperature() == EXPLORATION_TEMPERATURE {
            self.exploration_temperature
        } else {
            self.reasoning_temperature
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub purpose: Purpose,
    /// Pipeline stage active when the call was made, e.g. `topic`.
    pub stage: String,
    pub prompt: String,
    pub reply: String,
    pub prompt_chars: usize,
    pub reply_chars: usize,
    pub wall_time_ms: u64,
}

/// Append-only log of completed LLM calls for one question.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    records: Vec<CallRecord>,
}

impl Transcript {
    pub fn records(&self) -> &[CallRecord] {
        &self.records
    }

    pub fn call_count(&self) -> usize {
        self.records.len()
    }

    pub fn prompt_chars(&self) -> usize {
        self.records.iter().map(|r| r.prompt_chars).sum()
    }

    pub fn calls_in_stage(&self, stage: &str) -> usize {
        self.records.iter().filter(|r| r.stage == stage).count()
    }

    pub fn calls_for(&self, purpose: Purpose) -> usize {
        self.records.iter().filter(|r| r.purpose == purpose).count()
    }

    fn push(&mut self, record: CallRecord) {
        self.records.push(record);
    }
}

/// A backend bound to one question: applies settings, records every call and
/// collects degradation notes raised by parsers along the way.
pub struct LlmSession {
    backend: Arc<dyn LlmBackend>,
    settings: LlmSettings,
    transcript: Transcript,
    stage: String,
    notes: Vec<String>,
}

impl LlmSession {
    pub fn new(backend: Arc<dyn LlmBackend>, settings: LlmSettings) -> Self {
        Self {
            backend,
            settings,
            transcript: Transcript::default(),
            stage: "init".to_owned(),
            notes: Vec::new(),
        }
    }

    pub fn complete(&mut self, purpose: Purpose, prompt: String) -> Result<String> {
        let request = LlmRequest {
            temperature: self.settings.temperature_for(purpose),
            max_tokens: self.settings.max_tokens,
            purpose,
            prompt,
        };
        let started = Instant::now();
        let reply = self.backend.complete(&request)?;
        self.transcript.push(CallRecord {
            purpose,
            stage: self.stage.clone(),
            prompt_chars: request.prompt.chars().count(),
            reply_chars: reply.chars().count(),
            prompt: request.prompt,
            reply: reply.clone(),
            wall_time_ms: started.elapsed().as_millis() as u64,
        });
        Ok(reply)
    }

    pub fn set_stage(&mut self, stage: impl Into<String>) {
        self.stage = stage.into();
    }

    pub fn stage(&self) -> &str {
        &self.stage
    }

    pub fn note(&mut self, message: impl Into<String>) {
        let message = message.into();
        tracing::debug!(stage = %self.stage, "{message}");
        self.notes.push(format!("[{}] {message}", self.stage));
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn into_parts(self) -> (Transcript, Vec<String>) {
        (self.transcript, self.notes)
    }
}
