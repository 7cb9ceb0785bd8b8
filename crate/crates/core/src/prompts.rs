//! Prompt templates and their few-shot blocks.
//!
//! Templates use `{Name}` placeholders. Unknown brace groups are left as is,
//! so instruction text may contain literal braces.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::llm::Purpose;

pub const FEW_SHOT: &str = "In-Context Few-shot";
pub const QUERY: &str = "Query";
pub const TOPIC_ENTITY: &str = "Topic Entity";
pub const THINK_INDICATOR: &str = "Think Indicator";
pub const SPLIT_QUESTION: &str = "Split Question";
pub const CANDIDATE_PATHS: &str = "Candidate Paths";
pub const RELATED_PATHS: &str = "Related Paths";

const PLACEHOLDERS: [&str; 7] = [
    FEW_SHOT,
    QUERY,
    TOPIC_ENTITY,
    THINK_INDICATOR,
    SPLIT_QUESTION,
    CANDIDATE_PATHS,
    RELATED_PATHS,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub template: String,
    pub few_shot: String,
}

impl PromptTemplate {
    /// Substitute placeholders in one left-to-right pass. Values are never
    /// rescanned, so they may contain placeholder-like text.
    pub fn render(&self, fields: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.template.len() + self.few_shot.len());
        let mut rest = self.template.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let hit = after.find('}').and_then(|close| {
                let name = &after[..close];
                if !PLACEHOLDERS.contains(&name) {
                    return None;
                }
                let value = if name == FEW_SHOT {
                    Some(self.few_shot.trim_end())
                } else {
                    fields.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
                };
                Some((close, value.unwrap_or("")))
            });
            match hit {
                Some((close, value)) => {
                    out.push_str(value);
                    rest = &after[close + 1..];
                }
                None => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptLibrary {
    templates: Vec<(Purpose, PromptTemplate)>,
}

fn builtin(purpose: Purpose) -> (&'static str, &'static str) {
    match purpose {
        Purpose::Analysis => (
            include_str!("../prompts/analysis.txt"),
            include_str!("../prompts/analysis.fewshot.txt"),
        ),
        Purpose::Supplement => (
            include_str!("../prompts/supplement.txt"),
            include_str!("../prompts/supplement.fewshot.txt"),
        ),
        Purpose::PreciseSelect => (
            include_str!("../prompts/precise_select.txt"),
            include_str!("../prompts/precise_select.fewshot.txt"),
        ),
        Purpose::Summarize => (
            include_str!("../prompts/summarize.txt"),
            include_str!("../prompts/summarize.fewshot.txt"),
        ),
        Purpose::Evaluate => (
            include_str!("../prompts/evaluate.txt"),
            include_str!("../prompts/evaluate.fewshot.txt"),
        ),
        Purpose::Generate => (
            include_str!("../prompts/generate.txt"),
            include_str!("../prompts/generate.fewshot.txt"),
        ),
        Purpose::Extract => (
            include_str!("../prompts/extract.txt"),
            include_str!("../prompts/extract.fewshot.txt"),
        ),
    }
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        let templates = Purpose::ALL
            .iter()
            .map(|&p| {
                let (template, few_shot) = builtin(p);
                (
                    p,
                    PromptTemplate {
                        template: template.to_owned(),
                        few_shot: few_shot.to_owned(),
                    },
                )
            })
            .collect();
        Self { templates }
    }

    /// Built-in templates overridden by `<purpose>.txt` and
    /// `<purpose>.fewshot.txt` files found in `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(Error::Config(format!("prompt directory {} does not exist", dir.display())));
        }
        let mut lib = Self::builtin();
        for (purpose, t) in lib.templates.iter_mut() {
            let main = dir.join(format!("{}.txt", purpose.as_str()));
            if main.is_file() {
                t.template = fs::read_to_string(main)?;
            }
            let shots = dir.join(format!("{}.fewshot.txt", purpose.as_str()));
            if shots.is_file() {
                t.few_shot = fs::read_to_string(shots)?;
            }
        }
        Ok(lib)
    }

    pub fn get(&self, purpose: Purpose) -> &PromptTemplate {
        &self
            .templates
            .iter()
            .find(|(p, _)| *p == purpose)
            .expect("library holds every purpose")
            .1
    }

    pub fn render(&self, purpose: Purpose, fields: &[(&str, &str)]) -> String {
        self.get(purpose).render(fields)
    }
}
