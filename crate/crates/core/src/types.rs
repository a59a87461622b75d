//! Memory items, episodic chunks, and the working-memory state they live in.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::WeightsConfig;
use crate::embedding::Embedding;
use crate::error::WmError;
use crate::scalar::Scalar;
use crate::timing::AssistanceCandidate;

macro_rules! id_newtype {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_newtype!(ItemId, "item#");
id_newtype!(ChunkId, "chunk#");
id_newtype!(CandidateId, "cand#");

/// Perceptual channel of a memory item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Visuospatial,
    Phonological,
}

/// One perceived unit: a seen object label or a heard utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryItem<S> {
    pub id: ItemId,
    pub modality: Modality,
    pub content: String,
    pub embedding: Embedding<S>,
    pub encoded_at: S,
    pub last_activated_at: S,
    pub importance: S,
}

/// An episode: a group of bound items with a generated summary.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryChunk<S> {
    pub id: ChunkId,
    pub created_at: S,
    pub summary: String,
    pub summary_embedding: Embedding<S>,
    /// Member ids in binding order.
    pub item_ids: Vec<ItemId>,
}

/// Full mutable model: perception store, episodic buffer, deferred queue
/// and the simulated clock.
///
/// `unbound` lists perception items whose binding failed because a provider
/// errored; they are retried on the next update. With working providers it
/// is empty at every observable point.
#[derive(Clone, Debug)]
pub struct WorkingMemoryState<S> {
    pub perception: Vec<MemoryItem<S>>,
    pub episodic: Vec<MemoryChunk<S>>,
    pub deferred: VecDeque<AssistanceCandidate<S>>,
    pub unbound: Vec<ItemId>,
    pub now: S,
    next_item: u64,
    next_chunk: u64,
    next_candidate: u64,
}

impl<S: Scalar> Default for WorkingMemoryState<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> WorkingMemoryState<S> {
    pub fn new() -> Self {
        Self {
            perception: Vec::new(),
            episodic: Vec::new(),
            deferred: VecDeque::new(),
            unbound: Vec::new(),
            now: S::zero(),
            next_item: 0,
            next_chunk: 0,
            next_candidate: 0,
        }
    }

    /// Moves the clock forward; the clock never runs backwards.
    pub fn advance_to(&mut self, now: S) -> Result<(), WmError> {
        if now < self.now || !now.is_finite() {
            return Err(WmError::ClockRegression {
                now: now.as_f64(),
                last: self.now.as_f64(),
            });
        }
        self.now = now;
        Ok(())
    }

    pub fn next_item_id(&mut self) -> ItemId {
        let id = ItemId(self.next_item);
        self.next_item += 1;
        id
    }

    pub fn next_chunk_id(&mut self) -> ChunkId {
        let id = ChunkId(self.next_chunk);
        self.next_chunk += 1;
        id
    }

    pub fn next_candidate_id(&mut self) -> CandidateId {
        let id = CandidateId(self.next_candidate);
        self.next_candidate += 1;
        id
    }

    /// Bumps id counters past any ids already present; used after building
    /// a state by hand.
    pub fn sync_id_counters(&mut self) {
        if let Some(max) = self.perception.iter().map(|i| i.id.0).max() {
            self.next_item = self.next_item.max(max + 1);
        }
        if let Some(max) = self.episodic.iter().map(|c| c.id.0).max() {
            self.next_chunk = self.next_chunk.max(max + 1);
        }
        if let Some(max) = self.deferred.iter().map(|c| c.id.0).max() {
            self.next_candidate = self.next_candidate.max(max + 1);
        }
    }

    pub fn item(&self, id: ItemId) -> Option<&MemoryItem<S>> {
        self.perception.iter().find(|i| i.id == id)
    }

    pub fn item_mut(&mut self, id: ItemId) -> Option<&mut MemoryItem<S>> {
        self.perception.iter_mut().find(|i| i.id == id)
    }

    pub fn chunk(&self, id: ChunkId) -> Option<&MemoryChunk<S>> {
        self.episodic.iter().find(|c| c.id == id)
    }

    pub fn chunk_mut(&mut self, id: ChunkId) -> Option<&mut MemoryChunk<S>> {
        self.episodic.iter_mut().find(|c| c.id == id)
    }

    /// Chunk currently holding `item`, if any.
    pub fn chunk_of(&self, item: ItemId) -> Option<ChunkId> {
        self.episodic
            .iter()
            .find(|c| c.item_ids.contains(&item))
            .map(|c| c.id)
    }

    /// Removes an item from the perception store and from whatever chunk
    /// holds it, deleting that chunk if it is left empty.
    pub fn remove_item(&mut self, id: ItemId) -> Option<MemoryItem<S>> {
        let pos = self.perception.iter().position(|i| i.id == id)?;
        let item = self.perception.remove(pos);
        for chunk in self.episodic.iter_mut() {
            chunk.item_ids.retain(|&m| m != id);
        }
        self.episodic.retain(|c| !c.item_ids.is_empty());
        self.unbound.retain(|&m| m != id);
        Some(item)
    }

    /// Checks every structural invariant: capacities, unit-norm embeddings
    /// of the configured dimension, timestamp ordering, and the item/chunk
    /// partition.
    pub fn validate(&self, config: &WeightsConfig<S>) -> Result<(), WmError> {
        let fail = |msg: String| Err(WmError::Invariant(msg));
        if self.perception.len() > config.capacity_items {
            return fail(format!(
                "perception holds {} items (capacity {})",
                self.perception.len(),
                config.capacity_items
            ));
        }
        if self.episodic.len() > config.capacity_chunks {
            return fail(format!(
                "episodic buffer holds {} chunks (capacity {})",
                self.episodic.len(),
                config.capacity_chunks
            ));
        }
        let tol = S::lit(1e-9);
        let check_embedding = |e: &Embedding<S>, what: String| -> Result<(), WmError> {
            if e.dim() != config.embedding_dim {
                return Err(WmError::Invariant(format!(
                    "{what} has dimension {} (expected {})",
                    e.dim(),
                    config.embedding_dim
                )));
            }
            let norm = e.as_slice().iter().map(|&v| v * v).sum::<S>().sqrt();
            if (norm - S::one()).abs() > S::lit(1e-6).max(tol) {
                return Err(WmError::Invariant(format!("{what} is not unit norm")));
            }
            Ok(())
        };

        let mut owner: HashMap<ItemId, Option<ChunkId>> = HashMap::new();
        for item in &self.perception {
            if owner.insert(item.id, None).is_some() {
                return fail(format!("duplicate {}", item.id));
            }
            if item.last_activated_at < item.encoded_at {
                return fail(format!("{} activated before it was encoded", item.id));
            }
            if item.last_activated_at > self.now {
                return fail(format!("{} activated in the future", item.id));
            }
            if !item.importance.in_unit() {
                return fail(format!("{} importance outside [0,1]", item.id));
            }
            check_embedding(&item.embedding, item.id.to_string())?;
        }
        for chunk in &self.episodic {
            if chunk.item_ids.is_empty() {
                return Err(WmError::EmptyChunk(chunk.id));
            }
            check_embedding(&chunk.summary_embedding, chunk.id.to_string())?;
            for &m in &chunk.item_ids {
                match owner.get_mut(&m) {
                    None => return fail(format!("{} references missing {}", chunk.id, m)),
                    Some(Some(other)) => {
                        return fail(format!("{m} bound to both {other} and {}", chunk.id))
                    }
                    Some(slot) => *slot = Some(chunk.id),
                }
            }
        }
        for &m in &self.unbound {
            match owner.get(&m) {
                None => return fail(format!("unbound list references missing {m}")),
                Some(Some(c)) => return fail(format!("{m} is bound to {c} but listed unbound")),
                Some(None) => {}
            }
        }
        for (id, chunk) in &owner {
            if chunk.is_none() && !self.unbound.contains(id) {
                return fail(format!("{id} is not bound to any chunk"));
            }
        }
        Ok(())
    }

    /// Strict form of [`validate`](Self::validate): additionally requires
    /// that every item is bound.
    pub fn validate_strict(&self, config: &WeightsConfig<S>) -> Result<(), WmError> {
        self.validate(config)?;
        if let Some(id) = self.unbound.first() {
            return Err(WmError::Invariant(format!("{id} is unbound")));
        }
        Ok(())
    }
}
