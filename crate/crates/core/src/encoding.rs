//! Memory properties, duplicate detection, and capacity-bounded encoding
//! into the perception store.

use serde::{Deserialize, Serialize};

use crate::config::WeightsConfig;
use crate::embedding::{clamped_similarity, Embedding};
use crate::error::WmError;
use crate::providers::{ImportanceRequest, ProviderError, Providers};
use crate::scalar::{cmp, mean, Scalar};
use crate::types::{ItemId, MemoryChunk, MemoryItem, Modality, WorkingMemoryState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyScores<S> {
    pub recency: S,
    pub relevance: S,
    pub importance: S,
    pub composite: S,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemScores<S> {
    pub item_id: ItemId,
    #[serde(flatten)]
    pub scores: PropertyScores<S>,
}

/// Linear decay `1 - elapsed / T` from the last activation, floored at 0.
pub fn score_recency<S: Scalar>(item: &MemoryItem<S>, now: S, retention: S) -> Result<S, WmError> {
    if now < item.last_activated_at {
        return Err(WmError::ClockRegression {
            now: now.as_f64(),
            last: item.last_activated_at.as_f64(),
        });
    }
    let elapsed = now - item.last_activated_at;
    Ok((S::one() - elapsed / retention).max(S::zero()))
}

/// Mean clamped similarity to every episode summary; 0 with no episodes.
pub fn score_relevance<S: Scalar>(
    embedding: &Embedding<S>,
    chunks: &[MemoryChunk<S>],
) -> Result<S, WmError> {
    let sims = chunks
        .iter()
        .map(|c| clamped_similarity(embedding, &c.summary_embedding))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(mean(sims).unwrap_or_else(S::zero))
}

pub fn composite_score<S: Scalar>(
    recency: S,
    relevance: S,
    importance: S,
    config: &WeightsConfig<S>,
) -> S {
    config.alpha * recency + config.beta * relevance + config.gamma * importance
}

/// All three properties and their composite for `item` at `state.now`.
pub fn property_scores<S: Scalar>(
    item: &MemoryItem<S>,
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<PropertyScores<S>, WmError> {
    let recency = score_recency(item, state.now, config.retention)?;
    let relevance = score_relevance(&item.embedding, &state.episodic)?;
    let importance = item.importance;
    Ok(PropertyScores {
        recency,
        relevance,
        importance,
        composite: composite_score(recency, relevance, importance, config),
    })
}

pub fn all_scores<S: Scalar>(
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<Vec<ItemScores<S>>, WmError> {
    state
        .perception
        .iter()
        .map(|item| {
            Ok(ItemScores {
                item_id: item.id,
                scores: property_scores(item, state, config)?,
            })
        })
        .collect()
}

/// Same-modality item most similar to `embedding`, if that similarity is
/// strictly above `threshold`. Ties go to the most recently activated
/// item, then the smallest id.
pub fn detect_duplicate<S: Scalar>(
    embedding: &Embedding<S>,
    modality: Modality,
    items: &[MemoryItem<S>],
    threshold: S,
) -> Result<Option<ItemId>, WmError> {
    let mut best: Option<(S, &MemoryItem<S>)> = None;
    for item in items.iter().filter(|i| i.modality == modality) {
        let sim = clamped_similarity(embedding, &item.embedding)?;
        if sim <= threshold {
            continue;
        }
        let better = match best {
            None => true,
            Some((bs, bi)) => cmp(sim, bs)
                .then(cmp(item.last_activated_at, bi.last_activated_at))
                .then(bi.id.cmp(&item.id))
                .is_gt(),
        };
        if better {
            best = Some((sim, item));
        }
    }
    Ok(best.map(|(_, i)| i.id))
}

/// Item with the lowest composite score at `state.now`, with its score.
/// Ties: oldest `last_activated_at`, then oldest `encoded_at`, then
/// smallest id.
pub fn lowest_composite<S: Scalar>(
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<Option<(ItemId, S)>, WmError> {
    let mut best: Option<(S, &MemoryItem<S>)> = None;
    for item in &state.perception {
        let score = property_scores(item, state, config)?.composite;
        let better = match best {
            None => true,
            Some((bs, bi)) => cmp(score, bs)
                .then(cmp(item.last_activated_at, bi.last_activated_at))
                .then(cmp(item.encoded_at, bi.encoded_at))
                .then(item.id.cmp(&bi.id))
                .is_lt(),
        };
        if better {
            best = Some((score, item));
        }
    }
    Ok(best.map(|(s, i)| (i.id, s)))
}

/// Item to evict from a full perception store.
pub fn select_displacement_victim<S: Scalar>(
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<ItemId, WmError> {
    if state.perception.len() < config.capacity_items {
        return Err(WmError::StoreNotFull {
            len: state.perception.len(),
            capacity: config.capacity_items,
        });
    }
    lowest_composite(state, config)?
        .map(|(id, _)| id)
        .ok_or(WmError::StoreNotFull {
            len: 0,
            capacity: config.capacity_items,
        })
}

/// Where a new item's importance comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ImportanceSource<S> {
    /// Ask the importance provider, forwarding any scenario-supplied value.
    Scorer { supplied: Option<S> },
    /// Use this value without a provider call (delivered assistance).
    Fixed(S),
}

/// Fields of an item about to be encoded.
#[derive(Clone, Debug)]
pub struct NewItem<S> {
    pub modality: Modality,
    pub content: String,
    /// Precomputed embedding; the embedder is called when absent.
    pub embedding: Option<Embedding<S>>,
    pub importance: ImportanceSource<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EncodeKind {
    Added { item_id: ItemId },
    Refreshed { item_id: ItemId },
    Displaced { victim_id: ItemId, new_id: ItemId },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeOutcome<S> {
    pub kind: EncodeKind,
    /// Scores of the items present when the decision was made.
    pub scores_snapshot: Vec<ItemScores<S>>,
}

impl<S> EncodeOutcome<S> {
    /// Id of the inserted item, or `None` for a refresh.
    pub fn inserted(&self) -> Option<ItemId> {
        match self.kind {
            EncodeKind::Added { item_id } => Some(item_id),
            EncodeKind::Displaced { new_id, .. } => Some(new_id),
            EncodeKind::Refreshed { .. } => None,
        }
    }

    /// Item the encode touched: the new item or the refreshed one.
    pub fn item_id(&self) -> ItemId {
        match self.kind {
            EncodeKind::Added { item_id } | EncodeKind::Refreshed { item_id } => item_id,
            EncodeKind::Displaced { new_id, .. } => new_id,
        }
    }
}

fn check_unit<S: Scalar>(v: S, what: &str) -> Result<S, ProviderError> {
    if v.in_unit() {
        Ok(v)
    } else {
        Err(ProviderError::malformed(format!(
            "{what} {v} outside [0,1]"
        )))
    }
}

/// Encodes one perceived item at `state.now`.
///
/// A same-modality duplicate is refreshed instead of inserted. Otherwise
/// the item is inserted, displacing the lowest-composite item when the
/// store is full. The inserted item is placed on `state.unbound`; binding
/// it is the chunking step's job. On provider failure the state is left
/// untouched.
pub fn encode_item<S: Scalar>(
    state: &mut WorkingMemoryState<S>,
    new: NewItem<S>,
    providers: &Providers<S>,
    config: &WeightsConfig<S>,
    task_context: &str,
) -> Result<EncodeOutcome<S>, WmError> {
    let embedding = match new.embedding {
        Some(e) => e,
        None => providers.embedder.embed(&new.content, new.modality)?,
    };
    if embedding.dim() != config.embedding_dim {
        return Err(WmError::DimensionMismatch {
            expected: config.embedding_dim,
            actual: embedding.dim(),
        });
    }
    let scores_snapshot = all_scores(state, config)?;

    if let Some(id) = detect_duplicate(
        &embedding,
        new.modality,
        &state.perception,
        config.dedup_threshold,
    )? {
        let now = state.now;
        let item = state.item_mut(id).ok_or(WmError::UnknownItem(id))?;
        item.last_activated_at = now;
        return Ok(EncodeOutcome {
            kind: EncodeKind::Refreshed { item_id: id },
            scores_snapshot,
        });
    }

    let importance = match new.importance {
        ImportanceSource::Fixed(v) => v,
        ImportanceSource::Scorer { supplied } => {
            let request = ImportanceRequest {
                content: &new.content,
                modality: new.modality,
                task_context,
                supplied,
            };
            check_unit(providers.importance.score(&request)?, "importance")?
        }
    };
    if !importance.in_unit() {
        return Err(
            ProviderError::malformed(format!("importance {importance} outside [0,1]")).into(),
        );
    }

    let victim = if state.perception.len() >= config.capacity_items {
        let victim = select_displacement_victim(state, config)?;
        state.remove_item(victim);
        Some(victim)
    } else {
        None
    };

    let id = state.next_item_id();
    state.perception.push(MemoryItem {
        id,
        modality: new.modality,
        content: new.content,
        embedding,
        encoded_at: state.now,
        last_activated_at: state.now,
        importance,
    });
    state.unbound.push(id);

    let kind = match victim {
        Some(victim_id) => EncodeKind::Displaced {
            victim_id,
            new_id: id,
        },
        None => EncodeKind::Added { item_id: id },
    };
    Ok(EncodeOutcome {
        kind,
        scores_snapshot,
    })
}
