//! Per-step trace records, written one JSON object per line.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::chunking::BindOutcome;
use crate::config::WeightsConfig;
use crate::encoding::{property_scores, EncodeOutcome, PropertyScores};
use crate::error::WmError;
use crate::providers::ProviderError;
use crate::scalar::Scalar;
use crate::scenario::ScenarioEvent;
use crate::timing::{Decision, Outcome, Policy};
use crate::types::{CandidateId, ChunkId, ItemId, Modality, WorkingMemoryState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    /// Generated at this step.
    Fresh,
    /// Re-evaluated from the deferred queue.
    Deferred,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord<S> {
    pub candidate_id: CandidateId,
    pub source: CandidateSource,
    pub message: String,
    pub importance: S,
    pub decision: Decision<S>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRecord<S> {
    pub candidate_id: CandidateId,
    pub message: String,
    /// How the delivered message landed in perception memory.
    pub encode_outcome: Option<EncodeOutcome<S>>,
    pub bind_outcome: Option<BindOutcome<S>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemSnapshot<S> {
    pub id: ItemId,
    pub modality: Modality,
    pub content: String,
    pub encoded_at: S,
    pub last_activated_at: S,
    pub scores: PropertyScores<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkSnapshot<S> {
    pub id: ChunkId,
    pub created_at: S,
    pub summary: String,
    pub item_ids: Vec<ItemId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WmSnapshot<S> {
    pub items: Vec<ItemSnapshot<S>>,
    pub chunks: Vec<ChunkSnapshot<S>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unbound: Vec<ItemId>,
}

impl<S: Scalar> WmSnapshot<S> {
    pub fn capture(
        state: &WorkingMemoryState<S>,
        config: &WeightsConfig<S>,
    ) -> Result<Self, WmError> {
        let items = state
            .perception
            .iter()
            .map(|i| {
                Ok(ItemSnapshot {
                    id: i.id,
                    modality: i.modality,
                    content: i.content.clone(),
                    encoded_at: i.encoded_at,
                    last_activated_at: i.last_activated_at,
                    scores: property_scores(i, state, config)?,
                })
            })
            .collect::<Result<_, WmError>>()?;
        let chunks = state
            .episodic
            .iter()
            .map(|c| ChunkSnapshot {
                id: c.id,
                created_at: c.created_at,
                summary: c.summary.clone(),
                item_ids: c.item_ids.clone(),
            })
            .collect();
        Ok(Self {
            items,
            chunks,
            unbound: state.unbound.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueEntry<S> {
    pub candidate_id: CandidateId,
    pub message: String,
    pub age: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Encode,
    Bind,
    Rebind,
    Generate,
    EmbedCandidate,
    Deliver,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepError {
    pub stage: Stage,
    pub error: ProviderError,
}

/// Everything the engine did for one input event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<S> {
    pub step: u64,
    pub t: S,
    pub policy: Policy,
    pub event: ScenarioEvent<S>,
    pub encode_outcome: Option<EncodeOutcome<S>>,
    pub bind_outcome: Option<BindOutcome<S>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub retried_bindings: Vec<BindOutcome<S>>,
    pub candidates: Vec<CandidateRecord<S>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deliveries: Vec<DeliveryRecord<S>>,
    pub wm_snapshot: WmSnapshot<S>,
    pub deferred_queue: Vec<QueueEntry<S>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<StepError>,
}

pub fn write_record<S: Scalar, W: Write>(record: &TraceRecord<S>, mut out: W) -> io::Result<()> {
    serde_json::to_writer(&mut out, record)?;
    out.write_all(b"\n")
}

pub fn write_trace<S: Scalar, W: Write>(trace: &[TraceRecord<S>], mut out: W) -> io::Result<()> {
    for record in trace {
        write_record(record, &mut out)?;
    }
    out.flush()
}

pub fn trace_to_jsonl<S: Scalar>(trace: &[TraceRecord<S>]) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[derive(Debug, thiserror::Error)]
pub enum TraceReadError {
    #[error("line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Reads a JSON Lines trace; blank lines are skipped.
pub fn read_trace<S: Scalar, R: BufRead>(input: R) -> Result<Vec<TraceRecord<S>>, TraceReadError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| TraceReadError::Malformed {
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}
