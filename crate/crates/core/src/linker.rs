//! Topic entity recognition: keyword extraction and alignment to KG entities.

use serde::{Deserialize, Serialize};

use crate::analysis::fold;
use crate::embed::{rank_by_cosine, Embedder, Embedding};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::llm::{LlmSession, Purpose};
use crate::prompts::{self, PromptLibrary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEntity {
    pub mention: String,
    pub entity: EntityId,
    pub label: String,
    pub score: f64,
}

/// Labelled alignment candidates with their embeddings, built once per run.
pub struct EntityIndex {
    entries: Vec<(EntityId, String)>,
    folded: Vec<String>,
    embeddings: Vec<Embedding>,
}

impl EntityIndex {
    pub fn build(entries: Vec<(EntityId, String)>, embedder: &dyn Embedder) -> Result<Self> {
        let texts: Vec<String> = entries.iter().map(|(_, l)| l.clone()).collect();
        let embeddings = if texts.is_empty() {
            Vec::new()
        } else {
            embedder.embed(&texts)?
        };
        let folded = texts.iter().map(|t| fold(t)).collect();
        Ok(Self {
            entries,
            folded,
            embeddings,
        })
    }

    /// Every labelled entity of `kg`, sorted by id.
    pub fn from_graph(kg: &KnowledgeGraph, embedder: &dyn Embedder) -> Result<Self> {
        let mut entries: Vec<(EntityId, String)> = kg
            .entities()
            .iter()
            .filter_map(|e| kg.raw_label(e.as_str()).map(|l| (e.clone(), l.to_owned())))
            .collect();
        entries.sort();
        Self::build(entries, embedder)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(EntityId, String)] {
        &self.entries
    }
}

fn brace_groups(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let inner = after[..close].trim();
                if !inner.is_empty() {
                    out.push(inner.to_owned());
                }
                rest = &after[close + 1..];
            }
            None => break,
        }
    }
    out
}

fn parse_keywords(reply: &str) -> Vec<String> {
    let groups = brace_groups(reply);
    if !groups.is_empty() {
        return groups;
    }
    if let (Some(a), Some(b)) = (reply.find('['), reply.rfind(']')) {
        if a < b {
            if let Ok(list) = serde_json::from_str::<Vec<String>>(&reply[a..=b]) {
                return list.into_iter().map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect();
            }
        }
    }
    Vec::new()
}

/// Ask the model for the entity mentions in `question`, retrying once.
pub fn extract_topic_keywords(question: &str, prompts: &PromptLibrary, llm: &mut LlmSession) -> Result<Vec<String>> {
    if question.trim().is_empty() {
        return Err(Error::Precondition("question is empty".into()));
    }
    let prompt = prompts.render(Purpose::Extract, &[(prompts::QUERY, question)]);
    let mut last = String::new();
    for _ in 0..2 {
        let reply = llm.complete(Purpose::Extract, prompt.clone())?;
        let keywords = parse_keywords(&reply);
        if !keywords.is_empty() {
            return Ok(keywords);
        }
        last = reply;
    }
    Err(Error::Extraction { raw: last })
}

/// Map each keyword to a distinct entity: exact folded label match first,
/// otherwise the best cosine match not yet taken by an earlier keyword.
pub fn align_to_kg(keywords: &[String], index: &EntityIndex, embedder: &dyn Embedder) -> Result<Vec<TopicEntity>> {
    if index.is_empty() {
        return Err(Error::Alignment("candidate universe is empty".into()));
    }
    if keywords.is_empty() {
        return Err(Error::Precondition("no keywords to align".into()));
    }
    let mut taken = vec![false; index.len()];
    let mut out = Vec::new();
    for kw in keywords {
        let target = fold(kw);
        let exact = index.folded.iter().enumerate().position(|(i, l)| !taken[i] && *l == target);
        let chosen = match exact {
            Some(i) => Some((i, 1.0)),
            None => {
                let q = embedder.embed_one(kw)?;
                rank_by_cosine(&q, &index.embeddings)?
                    .into_iter()
                    .find(|(i, _)| !taken[*i])
            }
        };
        if let Some((i, score)) = chosen {
            taken[i] = true;
            let (entity, label) = &index.entries[i];
            out.push(TopicEntity {
                mention: kw.clone(),
                entity: entity.clone(),
                label: label.clone(),
                score,
            });
        }
    }
    Ok(out)
}
