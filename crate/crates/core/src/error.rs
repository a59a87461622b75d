use thiserror::Error;

use crate::providers::ProviderError;
use crate::types::{ChunkId, ItemId};

/// Contract violations and failures raised by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WmError {
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("cannot normalize a zero-length, zero-norm, or non-finite vector")]
    DegenerateVector,
    #[error("clock moved backwards: now {now} is before {last}")]
    ClockRegression { now: f64, last: f64 },
    #[error("perception store is not full ({len}/{capacity})")]
    StoreNotFull { len: usize, capacity: usize },
    #[error("episodic buffer is empty")]
    EmptyBuffer,
    #[error("chunk {0} has no members")]
    EmptyChunk(ChunkId),
    #[error("item {0} is not in the perception store")]
    UnknownItem(ItemId),
    #[error("item {item} is already bound to chunk {chunk}")]
    AlreadyBound { item: ItemId, chunk: ChunkId },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}
