//! Working-memory model for proactive assistance: a bounded perception
//! store, an episodic buffer of chunks, and utility-based delivery timing,
//! driven by replayable event streams.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the precision.

pub mod chunking;
pub mod config;
pub mod embedding;
pub mod encoding;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod providers;
pub mod replay;
pub mod scalar;
pub mod scenario;
pub mod timing;
pub mod trace;
pub mod types;

pub use chunking::{bind_or_create, binding_score, select_eviction_victim, BindKind, BindOutcome};
pub use config::{WeightsConfig, WeightsOverrides};
pub use embedding::{clamped_similarity, cosine_similarity, Embedding};
pub use encoding::{
    composite_score, encode_item, score_recency, score_relevance, select_displacement_victim,
    EncodeKind, EncodeOutcome, PropertyScores,
};
pub use engine::Engine;
pub use error::WmError;
pub use metrics::{compute_metrics, MetricsReport};
pub use providers::{ProviderError, ProviderErrorKind, Providers};
pub use replay::{replay, replay_mock, replay_with, Replay};
pub use scalar::Scalar;
pub use scenario::{parse_scenario, parse_scenario_str, Scenario, ScenarioError, ScenarioEvent};
pub use timing::{AssistanceCandidate, Decision, DecisionKind, Outcome, Policy, UtilityBreakdown};
pub use trace::{read_trace, write_trace, TraceRecord};
pub use types::{ChunkId, ItemId, MemoryChunk, MemoryItem, Modality, WorkingMemoryState};

pub type Embedding64 = Embedding<f64>;
pub type Engine64 = Engine<f64>;
pub type WeightsConfig64 = WeightsConfig<f64>;
pub type Scenario64 = Scenario<f64>;
pub type TraceRecord64 = TraceRecord<f64>;
pub type WorkingMemoryState64 = WorkingMemoryState<f64>;

pub type Embedding32 = Embedding<f32>;
pub type Engine32 = Engine<f32>;
pub type WeightsConfig32 = WeightsConfig<f32>;
pub type Scenario32 = Scenario<f32>;
pub type TraceRecord32 = TraceRecord<f32>;
pub type WorkingMemoryState32 = WorkingMemoryState<f32>;
