//! Pluggable stand-ins for the sensing and language-model stack: text
//! embedding, importance scoring, episode summarization, and assistance
//! generation.
//!
//! Every provider has a deterministic mock in [`mock`] and a JSON-over-HTTP
//! client in [`remote`].

pub mod mock;
pub mod remote;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::WeightsConfig;
use crate::embedding::Embedding;
use crate::scalar::Scalar;
use crate::timing::Policy;
use crate::types::{MemoryItem, Modality};

pub use mock::{MockEmbedder, MockGenerator, MockImportanceScorer, MockSummarizer};
pub use remote::RemoteClient;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderErrorKind {
    Timeout,
    MalformedResponse,
    Unavailable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderError {
    pub kind: ProviderErrorKind,
    pub detail: String,
}

impl ProviderError {
    pub fn timeout(detail: impl Into<String>) -> Self {
        Self {
            kind: ProviderErrorKind::Timeout,
            detail: detail.into(),
        }
    }

    pub fn malformed(detail: impl Into<String>) -> Self {
        Self {
            kind: ProviderErrorKind::MalformedResponse,
            detail: detail.into(),
        }
    }

    pub fn unavailable(detail: impl Into<String>) -> Self {
        Self {
            kind: ProviderErrorKind::Unavailable,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for ProviderError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ProviderErrorKind::Timeout => "timeout",
            ProviderErrorKind::MalformedResponse => "malformed response",
            ProviderErrorKind::Unavailable => "unavailable",
        };
        write!(f, "provider {kind}: {}", self.detail)
    }
}

impl std::error::Error for ProviderError {}

/// A candidate message returned by a generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedAssistance<S> {
    pub message: String,
    pub importance: S,
}

/// Scripted assistance attached to a scenario event. The mock generator
/// emits it once, the first time an item whose content equals `trigger`
/// is in the perception store.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssistHint<S> {
    pub trigger: String,
    pub message: String,
    pub importance: S,
}

pub trait Embedder<S: Scalar>: Send {
    fn embed(&self, content: &str, modality: Modality) -> Result<Embedding<S>, ProviderError>;
}

/// Input to an importance score request.
#[derive(Clone, Debug)]
pub struct ImportanceRequest<'a, S> {
    pub content: &'a str,
    pub modality: Modality,
    pub task_context: &'a str,
    /// Ground-truth importance supplied by the scenario, if any.
    pub supplied: Option<S>,
}

pub trait ImportanceScorer<S: Scalar>: Send {
    fn score(&self, request: &ImportanceRequest<'_, S>) -> Result<S, ProviderError>;
}

pub trait Summarizer<S: Scalar>: Send {
    /// One short sentence describing `items`, which arrive in id order.
    fn summarize(
        &self,
        items: &[&MemoryItem<S>],
        task_context: &str,
    ) -> Result<String, ProviderError>;
}

/// Snapshot of working memory handed to a generator at each update.
#[derive(Clone, Debug)]
pub struct GenerationRequest<'a, S> {
    pub policy: Policy,
    pub task_context: &'a str,
    pub newest_item: Option<&'a MemoryItem<S>>,
    pub perception: &'a [MemoryItem<S>],
    pub episodes: Vec<&'a str>,
    /// Messages delivered so far, oldest first.
    pub history: &'a [String],
    /// Hints carried by the event that triggered this update.
    pub hints: &'a [AssistHint<S>],
}

pub trait AssistanceGenerator<S: Scalar>: Send {
    /// Zero or more candidates; empty means no assistance is warranted.
    fn generate(
        &mut self,
        request: &GenerationRequest<'_, S>,
    ) -> Result<Vec<GeneratedAssistance<S>>, ProviderError>;
}

/// The four providers one engine instance talks to.
pub struct Providers<S: Scalar> {
    pub embedder: Box<dyn Embedder<S>>,
    pub importance: Box<dyn ImportanceScorer<S>>,
    pub summarizer: Box<dyn Summarizer<S>>,
    pub generator: Box<dyn AssistanceGenerator<S>>,
}

impl<S: Scalar> Providers<S> {
    /// Deterministic mocks seeded from `config`.
    pub fn mock(config: &WeightsConfig<S>) -> Self {
        Self {
            embedder: Box::new(MockEmbedder::new(config.embedding_dim, config.seed)),
            importance: Box::new(MockImportanceScorer::default()),
            summarizer: Box::new(MockSummarizer),
            generator: Box::new(MockGenerator::default()),
        }
    }

    /// All four roles served by one remote endpoint.
    pub fn remote(client: RemoteClient) -> Self {
        Self {
            embedder: Box::new(client.clone()),
            importance: Box::new(client.clone()),
            summarizer: Box::new(client.clone()),
            generator: Box::new(client),
        }
    }
}

impl<S: Scalar> fmt::Debug for Providers<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Providers").finish_non_exhaustive()
    }
}
