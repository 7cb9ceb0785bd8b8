use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{LlmBackend, LlmRequest};
use crate::error::{Error, Result};

const API_KEY_VARS: [&str; 2] = ["POG_API_KEY", "OPENAI_API_KEY"];

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f32,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Deserialize)]
struct ReplyMessage {
    content: String,
}

/// Chat-completion client. Reads the bearer token from `POG_API_KEY`, then
/// `OPENAI_API_KEY`. Transport failures are retried once after a backoff.
pub struct HttpBackend {
    url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
    backoff: Duration,
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, model: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(180)))
            .build()
            .into();
        Self {
            url: url.into(),
            model: model.into(),
            api_key: API_KEY_VARS.iter().find_map(|v| std::env::var(v).ok()),
            agent,
            backoff: Duration::from_millis(500),
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, request: &LlmRequest) -> Result<String> {
        let body = ChatRequest {
            model: &self.model,
            messages: vec![ChatMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let mut call = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call
            .send_json(&body)
            .map_err(|e| Error::Transport(format!("{}: {e}", self.url)))?;
        let parsed: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::Transport(format!("{}: malformed completion: {e}", self.url)))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Error::Transport(format!("{}: completion had no choices", self.url)))
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, request: &LlmRequest) -> Result<String> {
        match self.attempt(request) {
            Ok(reply) => Ok(reply),
            Err(first) => {
                tracing::warn!(purpose = %request.purpose, "llm call failed, retrying: {first}");
                thread::sleep(self.backoff);
                self.attempt(request).map_err(|e| Error::Llm {
                    purpose: request.purpose.to_string(),
                    message: e.to_string(),
                })
            }
        }
    }
}
