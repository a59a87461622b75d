//! JSON-over-HTTP provider client.
//!
//! Every call is a `POST` of `{"template": <id>, "fields": {...}}` to one
//! endpoint. Response bodies per template:
//!
//! | template              | response                                                        |
//! |-----------------------|-----------------------------------------------------------------|
//! | `embed`               | `{"embedding": [f, ...]}`                                       |
//! | `importance`          | `{"perception_memory": [f], "episodic_buffer": [...]}`          |
//! | `episode`             | `{"episode": "sentence"}`                                       |
//! | `assistance`          | `{"assistance_messages": [{"message": s, "importance": f}]}`    |
//! | `assistance_baseline` | plain sentence, or `NO ASSISTANCE`                              |
//!
//! No retries. Out-of-range scores are reported as malformed, never clamped.

use std::io;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use crate::embedding::Embedding;
use crate::scalar::Scalar;
use crate::timing::Policy;
use crate::types::{MemoryItem, Modality};

use super::{
    AssistanceGenerator, Embedder, GeneratedAssistance, GenerationRequest, ImportanceRequest,
    ImportanceScorer, ProviderError, Summarizer,
};

pub const NO_ASSISTANCE: &str = "NO ASSISTANCE";

/// Importance assigned to baseline messages, whose wire format carries none.
pub const BASELINE_IMPORTANCE: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct RemoteClient {
    endpoint: String,
    dim: usize,
    agent: ureq::Agent,
}

impl RemoteClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, dim: usize) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(timeout).build();
        Self {
            endpoint: endpoint.into(),
            dim,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn call(&self, template: &str, fields: Value) -> Result<String, ProviderError> {
        let body = json!({ "template": template, "fields": fields }).to_string();
        let response = self
            .agent
            .post(&self.endpoint)
            .set("Content-Type", "application/json")
            .send_string(&body)
            .map_err(classify)?;
        response
            .into_string()
            .map_err(|e| io_error(e, "reading response body"))
    }

    fn call_json<T: for<'de> Deserialize<'de>>(
        &self,
        template: &str,
        fields: Value,
    ) -> Result<T, ProviderError> {
        let text = self.call(template, fields)?;
        serde_json::from_str(&text)
            .map_err(|e| ProviderError::malformed(format!("{template}: {e}")))
    }
}

fn io_error(e: io::Error, context: &str) -> ProviderError {
    match e.kind() {
        io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock => {
            ProviderError::timeout(format!("{context}: {e}"))
        }
        _ => ProviderError::unavailable(format!("{context}: {e}")),
    }
}

fn classify(err: ureq::Error) -> ProviderError {
    match err {
        ureq::Error::Status(code, _) => ProviderError::unavailable(format!("HTTP status {code}")),
        ureq::Error::Transport(t) => {
            let mut source = std::error::Error::source(&t);
            while let Some(s) = source {
                if let Some(io) = s.downcast_ref::<io::Error>() {
                    if matches!(
                        io.kind(),
                        io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock
                    ) {
                        return ProviderError::timeout(t.to_string());
                    }
                }
                source = s.source();
            }
            ProviderError::unavailable(t.to_string())
        }
    }
}

fn modality_name(m: Modality) -> &'static str {
    match m {
        Modality::Visuospatial => "visuospatial",
        Modality::Phonological => "phonological",
    }
}

fn unit_score<S: Scalar>(v: f64, what: &str) -> Result<S, ProviderError> {
    if (0.0..=1.0).contains(&v) {
        Ok(S::lit(v))
    } else {
        Err(ProviderError::malformed(format!(
            "{what} {v} outside [0,1]"
        )))
    }
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct ImportanceResponse {
    perception_memory: Vec<f64>,
    #[serde(default)]
    #[allow(dead_code)]
    episodic_buffer: Vec<f64>,
}

#[derive(Deserialize)]
struct EpisodeResponse {
    episode: String,
}

#[derive(Deserialize)]
struct AssistanceResponse {
    assistance_messages: Vec<WireAssistance>,
}

#[derive(Deserialize)]
struct WireAssistance {
    message: String,
    importance: f64,
}

impl<S: Scalar> Embedder<S> for RemoteClient {
    fn embed(&self, content: &str, modality: Modality) -> Result<Embedding<S>, ProviderError> {
        if content.trim().is_empty() {
            return Err(ProviderError::malformed("cannot embed empty content"));
        }
        let r: EmbedResponse = self.call_json(
            "embed",
            json!({ "content": content, "modality": modality_name(modality) }),
        )?;
        let values = r.embedding.into_iter().map(S::lit).collect();
        Embedding::new(values, self.dim).map_err(|e| ProviderError::malformed(e.to_string()))
    }
}

impl<S: Scalar> ImportanceScorer<S> for RemoteClient {
    fn score(&self, request: &ImportanceRequest<'_, S>) -> Result<S, ProviderError> {
        let r: ImportanceResponse = self.call_json(
            "importance",
            json!({
                "task_context": request.task_context,
                "memory_items": [{
                    "modality": modality_name(request.modality),
                    "content": request.content,
                }],
            }),
        )?;
        match r.perception_memory.as_slice() {
            [v] => unit_score(*v, "importance"),
            other => Err(ProviderError::malformed(format!(
                "expected one perception_memory score, got {}",
                other.len()
            ))),
        }
    }
}

fn describe_items<S>(items: &[&MemoryItem<S>]) -> Value {
    Value::Array(
        items
            .iter()
            .map(|i| json!({ "modality": modality_name(i.modality), "content": i.content }))
            .collect(),
    )
}

impl<S: Scalar> Summarizer<S> for RemoteClient {
    fn summarize(
        &self,
        items: &[&MemoryItem<S>],
        task_context: &str,
    ) -> Result<String, ProviderError> {
        if items.is_empty() {
            return Err(ProviderError::malformed("summary requested for zero items"));
        }
        let r: EpisodeResponse = self.call_json(
            "episode",
            json!({ "task_context": task_context, "memory_items": describe_items(items) }),
        )?;
        let episode = r.episode.trim();
        if episode.is_empty() {
            return Err(ProviderError::malformed("empty episode summary"));
        }
        Ok(episode.to_string())
    }
}

impl<S: Scalar> AssistanceGenerator<S> for RemoteClient {
    fn generate(
        &mut self,
        request: &GenerationRequest<'_, S>,
    ) -> Result<Vec<GeneratedAssistance<S>>, ProviderError> {
        let newest = request
            .newest_item
            .map(|i| json!({ "modality": modality_name(i.modality), "content": i.content }));
        match request.policy {
            Policy::Wm => {
                let perception: Vec<&MemoryItem<S>> = request.perception.iter().collect();
                let r: AssistanceResponse = self.call_json(
                    "assistance",
                    json!({
                        "task_context": request.task_context,
                        "new_memory_item": newest,
                        "perception_memory": describe_items(&perception),
                        "episodic_buffer": request.episodes,
                        "history": request.history,
                    }),
                )?;
                r.assistance_messages
                    .into_iter()
                    .map(|m| {
                        if m.message.trim().is_empty() {
                            return Err(ProviderError::malformed("empty assistance message"));
                        }
                        Ok(GeneratedAssistance {
                            message: m.message,
                            importance: unit_score(m.importance, "assistance importance")?,
                        })
                    })
                    .collect()
            }
            Policy::Baseline => {
                let text = self.call(
                    "assistance_baseline",
                    json!({
                        "task_context": request.task_context,
                        "information": newest,
                        "history": request.history,
                    }),
                )?;
                Ok(parse_baseline_reply(&text)
                    .map(|message| GeneratedAssistance {
                        message,
                        importance: S::lit(BASELINE_IMPORTANCE),
                    })
                    .into_iter()
                    .collect())
            }
        }
    }
}

/// Plain-sentence baseline reply; a JSON string body is unwrapped first.
pub fn parse_baseline_reply(body: &str) -> Option<String> {
    let text = match serde_json::from_str::<String>(body.trim()) {
        Ok(s) => s,
        Err(_) => body.to_string(),
    };
    let text = text.trim();
    if text.is_empty()
        || text
            .trim_end_matches('.')
            .eq_ignore_ascii_case(NO_ASSISTANCE)
    {
        None
    } else {
        Some(text.to_string())
    }
}
