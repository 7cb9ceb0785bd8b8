//! Dense text embeddings and cosine top-k selection.

use std::sync::OnceLock;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FALLBACK_DIMENSION: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(pub Vec<f32>);

impl Embedding {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }
}

/// Cosine similarity; a zero-norm side yields 0.
pub fn cosine(a: &Embedding, b: &Embedding) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum();
    dot / (na * nb)
}

/// Candidate indices ordered by descending similarity to `query`, ties broken
/// by ascending index.
pub fn rank_by_cosine(query: &Embedding, candidates: &[Embedding]) -> Result<Vec<(usize, f64)>> {
    if let Some(bad) = candidates.iter().find(|c| c.dimension() != query.dimension()) {
        return Err(Error::Precondition(format!(
            "embedding dimension mismatch: {} vs {}",
            bad.dimension(),
            query.dimension()
        )));
    }
    let mut scored: Vec<(usize, f64)> = candidates.iter().map(|c| cosine(query, c)).enumerate().collect();
    // Stable sort keeps insertion order among equal scores.
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scored)
}

/// Keys of the `k` candidates most similar to `query`.
pub fn cosine_top_k<K: Clone>(query: &Embedding, candidates: &[(K, Embedding)], k: usize) -> Result<Vec<K>> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let vectors: Vec<Embedding> = candidates.iter().map(|(_, v)| v.clone()).collect();
    let ranked = rank_by_cosine(query, &vectors)?;
    Ok(ranked
        .into_iter()
        .take(k)
        .map(|(i, _)| candidates[i].0.clone())
        .collect())
}

/// A text encoder. Implementations must be deterministic for a fixed input.
pub trait Embedder: Send + Sync {
    fn name(&self) -> &str;

    /// Output dimension, once known.
    fn dimension(&self) -> Option<usize>;

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>>;

    fn embed_one(&self, text: &str) -> Result<Embedding> {
        let mut out = self.embed(&[text.to_owned()])?;
        Ok(out.remove(0))
    }
}

/// Zero-dependency fallback encoder: an L2-normalized bag of hashed tokens.
///
/// Text is lowercased and split on every non-alphanumeric character. Each
/// token lands in bucket `fnv1a64(token) % dimension` and adds 1 there; the
/// resulting count vector is divided by its Euclidean norm. Text with no
/// tokens maps to the zero vector.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(Self { dimension })
    }

    fn encode(&self, text: &str) -> Embedding {
        let mut values = vec![0f32; self.dimension];
        let lowered = text.to_lowercase();
        for token in lowered.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let bucket = (fnv1a64(token.as_bytes()) % self.dimension as u64) as usize;
            values[bucket] += 1.0;
        }
        let norm = values.iter().map(|v| v * v).sum::<f32>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        Embedding(values)
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_FALLBACK_DIMENSION,
        }
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

impl Embedder for HashingEmbedder {
    fn name(&self) -> &str {
        "fallback"
    }

    fn dimension(&self) -> Option<usize> {
        Some(self.dimension)
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        if texts.is_empty() {
            return Err(Error::Precondition("embed called with no texts".into()));
        }
        Ok(texts.iter().map(|t| self.encode(t)).collect())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

/// Remote encoder speaking `{"texts": [...]}` → `{"vectors": [[...], ...]}`.
pub struct HttpEmbedder {
    url: String,
    agent: ureq::Agent,
    dimension: OnceLock<usize>,
}

impl HttpEmbedder {
    pub fn new(url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
            dimension: OnceLock::new(),
        }
    }
}

impl Embedder for HttpEmbedder {
    fn name(&self) -> &str {
        &self.url
    }

    fn dimension(&self) -> Option<usize> {
        self.dimension.get().copied()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Embedding>> {
        if texts.is_empty() {
            return Err(Error::Precondition("embed called with no texts".into()));
        }
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(EmbedRequest { texts })
            .map_err(|e| Error::Transport(format!("{}: {e}", self.url)))?;
        let body: EmbedResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::Transport(format!("{}: malformed embedding response: {e}", self.url)))?;
        if body.vectors.len() != texts.len() {
            return Err(Error::Transport(format!(
                "{}: expected {} vectors, got {}",
                self.url,
                texts.len(),
                body.vectors.len()
            )));
        }
        let dim = *self.dimension.get_or_init(|| body.vectors[0].len());
        if body.vectors.iter().any(|v| v.len() != dim || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Transport(format!("{}: inconsistent or non-finite vectors", self.url)));
        }
        Ok(body.vectors.into_iter().map(Embedding).collect())
    }
}
