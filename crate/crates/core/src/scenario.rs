//! Scenario files: a task context plus a timestamped stream of perceived
//! events.
//!
//! ```json
//! {
//!   "name": "dining",
//!   "task_context": "The user is setting up a dining table...",
//!   "events": [
//!     {"t": 0.0, "kind": "visual", "content": "fork", "importance": 0.6,
//!      "assist_hints": [{"trigger": "fork", "message": "...", "importance": 0.8}]},
//!     {"t": 1.0, "kind": "speech", "content": "four of us for dinner"}
//!   ],
//!   "config_overrides": {"T": 20}
//! }
//! ```

use std::fmt;
use std::io::Read;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::config::{WeightsConfig, WeightsOverrides};
use crate::error::WmError;
use crate::providers::AssistHint;
use crate::scalar::Scalar;
use crate::types::Modality;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    Visual,
    Speech,
}

impl EventKind {
    pub fn modality(self) -> Modality {
        match self {
            EventKind::Visual => Modality::Visuospatial,
            EventKind::Speech => Modality::Phonological,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Visual => "visual",
            EventKind::Speech => "speech",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for EventKind {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for EventKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "visual" => Ok(EventKind::Visual),
            "speech" => Ok(EventKind::Speech),
            other => Err(de::Error::custom(format!(
                "unknown event kind {other:?} (expected \"visual\" or \"speech\")"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEvent<S> {
    pub t: S,
    pub kind: EventKind,
    pub content: String,
    /// Precomputed raw embedding; bypasses the embedder when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<S>>,
    /// Ground-truth importance handed to the importance scorer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assist_hints: Option<Vec<AssistHint<S>>>,
}

impl<S: Scalar> ScenarioEvent<S> {
    pub fn new(t: S, kind: EventKind, content: impl Into<String>) -> Self {
        Self {
            t,
            kind,
            content: content.into(),
            embedding: None,
            importance: None,
            assist_hints: None,
        }
    }

    pub fn hints(&self) -> &[AssistHint<S>] {
        self.assist_hints.as_deref().unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario<S> {
    pub name: String,
    #[serde(default)]
    pub task_context: String,
    pub events: Vec<ScenarioEvent<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_overrides: Option<WeightsOverrides<S>>,
}

impl<S: Scalar> Scenario<S> {
    /// `base` with this scenario's overrides applied.
    pub fn effective_config(&self, base: &WeightsConfig<S>) -> Result<WeightsConfig<S>, WmError> {
        match &self.config_overrides {
            Some(o) => o.apply(base),
            None => {
                base.validate()?;
                Ok(base.clone())
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{message} at line {line} column {column}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("event {index}: non-monotone timestamps ({t} after {previous})")]
    NonMonotone { index: usize, previous: f64, t: f64 },
    #[error("event {index}: embedding has dimension {actual} (expected {expected})")]
    Dimension {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("event {index}: {what} {value} outside [0,1]")]
    OutOfRange {
        index: usize,
        what: &'static str,
        value: f64,
    },
    #[error("event {index}: {message}")]
    InvalidEvent { index: usize, message: String },
    #[error("scenario name must be non-empty")]
    EmptyName,
    #[error("config_overrides: {0}")]
    Config(#[from] WmError),
    #[error("reading scenario: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            return ScenarioError::Io(e.into());
        }
        let full = e.to_string();
        // serde_json appends " at line L column C"; keep only the message.
        let message = match full.rfind(" at line ") {
            Some(pos) => full[..pos].to_string(),
            None => full,
        };
        ScenarioError::Syntax {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

/// Incremental event checker: enforces ordering and per-event ranges
/// across a stream, so files and line-delimited stdin share one rule set.
#[derive(Clone, Debug)]
pub struct EventValidator<S> {
    dim: usize,
    previous: Option<S>,
    index: usize,
}

impl<S: Scalar> EventValidator<S> {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            previous: None,
            index: 0,
        }
    }

    pub fn check(&mut self, event: &ScenarioEvent<S>) -> Result<(), ScenarioError> {
        let index = self.index;
        let invalid = |message: &str| ScenarioError::InvalidEvent {
            index,
            message: message.into(),
        };
        if !event.t.is_finite() || event.t < S::zero() {
            return Err(invalid("t must be a finite non-negative number"));
        }
        if let Some(prev) = self.previous {
            if event.t < prev {
                return Err(ScenarioError::NonMonotone {
                    index,
                    previous: prev.as_f64(),
                    t: event.t.as_f64(),
                });
            }
        }
        if event.content.trim().is_empty() {
            return Err(invalid("content must be non-empty"));
        }
        if let Some(imp) = event.importance {
            if !imp.in_unit() {
                return Err(ScenarioError::OutOfRange {
                    index,
                    what: "importance",
                    value: imp.as_f64(),
                });
            }
        }
        if let Some(e) = &event.embedding {
            if e.len() != self.dim {
                return Err(ScenarioError::Dimension {
                    index,
                    expected: self.dim,
                    actual: e.len(),
                });
            }
            if crate::embedding::Embedding::normalized(e.clone()).is_err() {
                return Err(invalid("embedding must be finite and non-zero"));
            }
        }
        for hint in event.hints() {
            if !hint.importance.in_unit() {
                return Err(ScenarioError::OutOfRange {
                    index,
                    what: "hint importance",
                    value: hint.importance.as_f64(),
                });
            }
            if hint.message.trim().is_empty() || hint.trigger.trim().is_empty() {
                return Err(invalid("hint trigger and message must be non-empty"));
            }
        }
        self.previous = Some(event.t);
        self.index += 1;
        Ok(())
    }
}

/// Parses and validates a scenario. Embedding dimensions are checked
/// against `base` with the scenario's own overrides applied.
pub fn parse_scenario<S: Scalar, R: Read>(
    source: R,
    base: &WeightsConfig<S>,
) -> Result<Scenario<S>, ScenarioError> {
    let scenario: Scenario<S> = serde_json::from_reader(source)?;
    validate_scenario(&scenario, base)?;
    Ok(scenario)
}

pub fn parse_scenario_str<S: Scalar>(
    source: &str,
    base: &WeightsConfig<S>,
) -> Result<Scenario<S>, ScenarioError> {
    parse_scenario(source.as_bytes(), base)
}

pub fn validate_scenario<S: Scalar>(
    scenario: &Scenario<S>,
    base: &WeightsConfig<S>,
) -> Result<(), ScenarioError> {
    if scenario.name.trim().is_empty() {
        return Err(ScenarioError::EmptyName);
    }
    let config = scenario.effective_config(base)?;
    let mut validator = EventValidator::new(config.embedding_dim);
    for event in &scenario.events {
        validator.check(event)?;
    }
    Ok(())
}

/// Parses one line of a line-delimited event stream.
pub fn parse_event_line<S: Scalar>(line: &str) -> Result<ScenarioEvent<S>, ScenarioError> {
    Ok(serde_json::from_str(line)?)
}
