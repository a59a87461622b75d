//! Episodic binding: attach each new item to the chunk it coheres with, or
//! open a new chunk, evicting the weakest chunk when the buffer is full.

use serde::{Deserialize, Serialize};

use crate::config::WeightsConfig;
use crate::embedding::{clamped_similarity, Embedding};
use crate::encoding::property_scores;
use crate::error::WmError;
use crate::providers::{ProviderError, Providers};
use crate::scalar::{cmp, mean, Scalar};
use crate::types::{ChunkId, ItemId, MemoryChunk, MemoryItem, Modality, WorkingMemoryState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkScore<S> {
    pub chunk_id: ChunkId,
    pub score: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BindKind<S> {
    Bound {
        chunk_id: ChunkId,
        score: S,
    },
    Created {
        chunk_id: ChunkId,
    },
    CreatedWithDisplacement {
        new_chunk_id: ChunkId,
        evicted_chunk_id: ChunkId,
    },
}

/// Where an orphan of an evicted chunk ended up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Placement<S> {
    Bound {
        chunk_id: ChunkId,
        score: S,
    },
    Created {
        chunk_id: ChunkId,
    },
    /// Joined the best chunk despite scoring at or below the threshold.
    Forced {
        chunk_id: ChunkId,
        score: S,
    },
    /// A provider failed; the item waits on the unbound list.
    Unbound {
        error: ProviderError,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rebinding<S> {
    pub item_id: ItemId,
    pub placement: Placement<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Deserialize<'de>"))]
pub struct BindOutcome<S> {
    pub item_id: ItemId,
    pub kind: BindKind<S>,
    /// Binding score against every chunk present before the decision.
    pub candidate_scores: Vec<ChunkScore<S>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rebound: Vec<Rebinding<S>>,
}

fn member<'a, S: Scalar>(
    state: &'a WorkingMemoryState<S>,
    chunk: &MemoryChunk<S>,
    id: ItemId,
) -> Result<&'a MemoryItem<S>, WmError> {
    state
        .item(id)
        .ok_or_else(|| WmError::Invariant(format!("{} references missing {id}", chunk.id)))
}

/// `lambda * sim(item, summary) + (1 - lambda) * mean sim(item, member)`.
pub fn binding_score<S: Scalar>(
    item: &MemoryItem<S>,
    chunk: &MemoryChunk<S>,
    state: &WorkingMemoryState<S>,
    lambda: S,
) -> Result<S, WmError> {
    if chunk.item_ids.is_empty() {
        return Err(WmError::EmptyChunk(chunk.id));
    }
    let episode = clamped_similarity(&item.embedding, &chunk.summary_embedding)?;
    let sims = chunk
        .item_ids
        .iter()
        .map(|&m| clamped_similarity(&item.embedding, &member(state, chunk, m)?.embedding))
        .collect::<Result<Vec<_>, _>>()?;
    let item_sim = mean(sims).unwrap_or_else(S::zero);
    Ok(lambda * episode + (S::one() - lambda) * item_sim)
}

/// Mean composite score of a chunk's members at `state.now`.
pub fn chunk_mean_composite<S: Scalar>(
    chunk: &MemoryChunk<S>,
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<S, WmError> {
    let composites = chunk
        .item_ids
        .iter()
        .map(|&m| Ok(property_scores(member(state, chunk, m)?, state, config)?.composite))
        .collect::<Result<Vec<_>, WmError>>()?;
    mean(composites).ok_or(WmError::EmptyChunk(chunk.id))
}

/// Chunk with the lowest mean member composite; ties go to the oldest
/// `created_at`, then the smallest id.
pub fn select_eviction_victim<S: Scalar>(
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<ChunkId, WmError> {
    let mut best: Option<(S, &MemoryChunk<S>)> = None;
    for chunk in &state.episodic {
        let score = chunk_mean_composite(chunk, state, config)?;
        let better = match best {
            None => true,
            Some((bs, bc)) => cmp(score, bs)
                .then(cmp(chunk.created_at, bc.created_at))
                .then(chunk.id.cmp(&bc.id))
                .is_lt(),
        };
        if better {
            best = Some((score, chunk));
        }
    }
    best.map(|(_, c)| c.id).ok_or(WmError::EmptyBuffer)
}

fn score_all<S: Scalar>(
    item: &MemoryItem<S>,
    state: &WorkingMemoryState<S>,
    lambda: S,
) -> Result<Vec<ChunkScore<S>>, WmError> {
    state
        .episodic
        .iter()
        .map(|c| {
            Ok(ChunkScore {
                chunk_id: c.id,
                score: binding_score(item, c, state, lambda)?,
            })
        })
        .collect()
}

/// Highest score; ties go to the most recently created chunk, then the
/// smallest id.
fn best_chunk<S: Scalar>(
    scores: &[ChunkScore<S>],
    state: &WorkingMemoryState<S>,
) -> Option<ChunkScore<S>> {
    let created = |id: ChunkId| {
        state
            .chunk(id)
            .map(|c| c.created_at)
            .unwrap_or_else(S::zero)
    };
    scores.iter().copied().reduce(|best, s| {
        let ord = cmp(s.score, best.score)
            .then(cmp(created(s.chunk_id), created(best.chunk_id)))
            .then(best.chunk_id.cmp(&s.chunk_id));
        if ord.is_gt() {
            s
        } else {
            best
        }
    })
}

/// Summary text and embedding for a set of members, in item-id order.
fn summarize<S: Scalar>(
    state: &WorkingMemoryState<S>,
    members: &[ItemId],
    providers: &Providers<S>,
    config: &WeightsConfig<S>,
    task_context: &str,
) -> Result<(String, Embedding<S>), WmError> {
    let mut ids = members.to_vec();
    ids.sort();
    let items = ids
        .iter()
        .map(|&id| state.item(id).ok_or(WmError::UnknownItem(id)))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = providers.summarizer.summarize(&items, task_context)?;
    let embedding = providers.embedder.embed(&summary, Modality::Phonological)?;
    if embedding.dim() != config.embedding_dim {
        return Err(ProviderError::malformed(format!(
            "summary embedding has dimension {} (expected {})",
            embedding.dim(),
            config.embedding_dim
        ))
        .into());
    }
    Ok((summary, embedding))
}

/// Adds `item` to an existing chunk, regenerating its summary. Nothing
/// changes if summarization fails.
fn join_chunk<S: Scalar>(
    state: &mut WorkingMemoryState<S>,
    item: ItemId,
    chunk_id: ChunkId,
    providers: &Providers<S>,
    config: &WeightsConfig<S>,
    task_context: &str,
) -> Result<(), WmError> {
    let mut members = state
        .chunk(chunk_id)
        .ok_or(WmError::EmptyBuffer)?
        .item_ids
        .clone();
    members.push(item);
    let (summary, embedding) = summarize(state, &members, providers, config, task_context)?;
    let chunk = state.chunk_mut(chunk_id).expect("chunk checked above");
    chunk.item_ids = members;
    chunk.summary = summary;
    chunk.summary_embedding = embedding;
    state.unbound.retain(|&m| m != item);
    Ok(())
}

fn push_chunk<S: Scalar>(
    state: &mut WorkingMemoryState<S>,
    item: ItemId,
    summary: String,
    summary_embedding: Embedding<S>,
) -> ChunkId {
    let id = state.next_chunk_id();
    state.episodic.push(MemoryChunk {
        id,
        created_at: state.now,
        summary,
        summary_embedding,
        item_ids: vec![item],
    });
    state.unbound.retain(|&m| m != item);
    id
}

/// Binds an unbound perception item into the episodic buffer.
///
/// Binds to the best chunk when its score is strictly above `theta`;
/// otherwise opens a new chunk, first evicting the chunk with the lowest
/// mean member composite if the buffer is full. Items of an evicted chunk
/// stay in perception and are re-bound in id order: each joins a chunk
/// above threshold, else may open one new chunk if there is room, else is
/// forced into its best-scoring chunk.
///
/// A provider failure on the main item returns an error and leaves the
/// state unchanged; the item stays on `state.unbound`.
pub fn bind_or_create<S: Scalar>(
    state: &mut WorkingMemoryState<S>,
    item_id: ItemId,
    providers: &Providers<S>,
    config: &WeightsConfig<S>,
    task_context: &str,
) -> Result<BindOutcome<S>, WmError> {
    let item = state.item(item_id).ok_or(WmError::UnknownItem(item_id))?;
    if let Some(chunk) = state.chunk_of(item_id) {
        return Err(WmError::AlreadyBound {
            item: item_id,
            chunk,
        });
    }
    let candidate_scores = score_all(item, state, config.lambda)?;
    let best = best_chunk(&candidate_scores, state);

    if let Some(best) = best.filter(|b| b.score > config.theta) {
        join_chunk(
            state,
            item_id,
            best.chunk_id,
            providers,
            config,
            task_context,
        )?;
        return Ok(BindOutcome {
            item_id,
            kind: BindKind::Bound {
                chunk_id: best.chunk_id,
                score: best.score,
            },
            candidate_scores,
            rebound: Vec::new(),
        });
    }

    let (summary, embedding) = summarize(state, &[item_id], providers, config, task_context)?;
    let evicted = if state.episodic.len() >= config.capacity_chunks {
        let victim = select_eviction_victim(state, config)?;
        let pos = state
            .episodic
            .iter()
            .position(|c| c.id == victim)
            .expect("victim exists");
        let chunk = state.episodic.remove(pos);
        Some(chunk)
    } else {
        None
    };
    let new_chunk_id = push_chunk(state, item_id, summary, embedding);

    let Some(evicted) = evicted else {
        return Ok(BindOutcome {
            item_id,
            kind: BindKind::Created {
                chunk_id: new_chunk_id,
            },
            candidate_scores,
            rebound: Vec::new(),
        });
    };

    let mut orphans = evicted.item_ids.clone();
    orphans.sort();
    for &o in &orphans {
        if !state.unbound.contains(&o) {
            state.unbound.push(o);
        }
    }
    let rebound = rebind_orphans(state, &orphans, providers, config, task_context)?;
    Ok(BindOutcome {
        item_id,
        kind: BindKind::CreatedWithDisplacement {
            new_chunk_id,
            evicted_chunk_id: evicted.id,
        },
        candidate_scores,
        rebound,
    })
}

fn rebind_orphans<S: Scalar>(
    state: &mut WorkingMemoryState<S>,
    orphans: &[ItemId],
    providers: &Providers<S>,
    config: &WeightsConfig<S>,
    task_context: &str,
) -> Result<Vec<Rebinding<S>>, WmError> {
    let mut created_one = false;
    let mut out = Vec::with_capacity(orphans.len());
    for &orphan in orphans {
        let item = state.item(orphan).ok_or(WmError::UnknownItem(orphan))?;
        let scores = score_all(item, state, config.lambda)?;
        let best = best_chunk(&scores, state).ok_or(WmError::EmptyBuffer)?;

        let attempt = if best.score > config.theta {
            join_chunk(
                state,
                orphan,
                best.chunk_id,
                providers,
                config,
                task_context,
            )
            .map(|_| Placement::Bound {
                chunk_id: best.chunk_id,
                score: best.score,
            })
        } else if !created_one && state.episodic.len() < config.capacity_chunks {
            summarize(state, &[orphan], providers, config, task_context).map(|(s, e)| {
                created_one = true;
                Placement::Created {
                    chunk_id: push_chunk(state, orphan, s, e),
                }
            })
        } else {
            join_chunk(
                state,
                orphan,
                best.chunk_id,
                providers,
                config,
                task_context,
            )
            .map(|_| Placement::Forced {
                chunk_id: best.chunk_id,
                score: best.score,
            })
        };
        let placement = match attempt {
            Ok(p) => p,
            Err(WmError::Provider(error)) => Placement::Unbound { error },
            Err(other) => return Err(other),
        };
        out.push(Rebinding {
            item_id: orphan,
            placement,
        });
    }
    Ok(out)
}
