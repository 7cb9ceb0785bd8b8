use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{LlmBackend, LlmRequest, Purpose};
use crate::error::{Error, Result};

/// One scripted reply. Matches calls with the same purpose whose prompt
/// contains `match` (when given). Entries are consumed on use unless
/// `repeat` is set.
///
/// `rank` appends a bracketed index list naming the prompt's numbered path
/// lines that contain each needle, in needle order. `echo_paths` appends the
/// prompt's numbered path lines verbatim, without their `Path i:` prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockEntry {
    pub purpose: Purpose,
    #[serde(default, rename = "match", skip_serializing_if = "Option::is_none")]
    pub matches: Option<String>,
    pub reply: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub repeat: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub echo_paths: bool,
}

impl MockEntry {
    pub fn new(purpose: Purpose, reply: impl Into<String>) -> Self {
        Self {
            purpose,
            matches: None,
            reply: reply.into(),
            repeat: false,
            rank: None,
            echo_paths: false,
        }
    }

    pub fn ranking<S: Into<String>>(mut self, needles: impl IntoIterator<Item = S>) -> Self {
        self.rank = Some(needles.into_iter().map(Into::into).collect());
        self
    }

    pub fn echoing_paths(mut self) -> Self {
        self.echo_paths = true;
        self
    }

    fn render(&self, prompt: &str) -> String {
        let mut reply = self.reply.clone();
        let lines = numbered_paths(prompt);
        if let Some(needles) = &self.rank {
            let mut order: Vec<usize> = Vec::new();
            for needle in needles {
                for (i, line) in &lines {
                    if line.contains(needle.as_str()) && !order.contains(i) {
                        order.push(*i);
                    }
                }
            }
            let list: Vec<String> = order.iter().map(usize::to_string).collect();
            reply.push_str(&format!("[{}]", list.join(", ")));
        }
        if self.echo_paths {
            for (_, line) in &lines {
                reply.push('\n');
                reply.push_str(line);
            }
        }
        reply
    }

    pub fn matching(mut self, needle: impl Into<String>) -> Self {
        self.matches = Some(needle.into());
        self
    }

    pub fn repeating(mut self) -> Self {
        self.repeat = true;
        self
    }
}

/// `Path i: ...` lines after the last `Paths:` field of a prompt.
fn numbered_paths(prompt: &str) -> Vec<(usize, &str)> {
    let Some(at) = prompt.rfind("Paths:") else {
        return Vec::new();
    };
    prompt[at..]
        .lines()
        .filter_map(|l| {
            let rest = l.trim().strip_prefix("Path ")?;
            let (num, body) = rest.split_once(':')?;
            Some((num.trim().parse().ok()?, body.trim()))
        })
        .collect()
}

/// Deterministic scripted backend for offline runs.
#[derive(Debug)]
pub struct MockBackend {
    script: Vec<MockEntry>,
    used: Mutex<Vec<bool>>,
}

impl MockBackend {
    pub fn new(script: Vec<MockEntry>) -> Self {
        let used = Mutex::new(vec![false; script.len()]);
        Self { script, used }
    }

    /// Load a JSON list of `{purpose, match?, reply, repeat?}` objects.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let script: Vec<MockEntry> = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("mock script {}: {e}", path.display())))?;
        Ok(Self::new(script))
    }

    pub fn remaining(&self) -> usize {
        let used = self.used.lock().expect("mock state poisoned");
        self.script
            .iter()
            .zip(used.iter())
            .filter(|(e, &u)| !u && !e.repeat)
            .count()
    }
}

impl LlmBackend for MockBackend {
    fn complete(&self, request: &LlmRequest) -> Result<String> {
        let mut used = self.used.lock().expect("mock state poisoned");
        let hit = self.script.iter().enumerate().find(|(i, entry)| {
            entry.purpose == request.purpose
                && (entry.repeat || !used[*i])
                && entry.matches.as_deref().is_none_or(|m| request.prompt.contains(m))
        });
        match hit {
            Some((i, entry)) => {
                used[i] = true;
                Ok(entry.render(&request.prompt))
            }
            None => Err(Error::Config(format!(
                "mock script has no remaining reply for purpose `{}`",
                request.purpose
            ))),
        }
    }
}
