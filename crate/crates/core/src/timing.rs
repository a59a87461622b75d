//! Assistance timing: value versus interruption cost, the
//! deliver/defer/discard rule, and the deferred queue.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::WeightsConfig;
use crate::embedding::{clamped_similarity, Embedding};
use crate::encoding::{lowest_composite, score_relevance};
use crate::error::WmError;
use crate::providers::GeneratedAssistance;
use crate::scalar::{mean, Scalar};
use crate::types::{CandidateId, Modality, WorkingMemoryState};

/// Which delivery policy drives a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Utility-based timing over the working-memory model.
    Wm,
    /// Deliver every generated message immediately.
    Baseline,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Wm => "wm",
            Policy::Baseline => "baseline",
        })
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wm" => Ok(Policy::Wm),
            "baseline" => Ok(Policy::Baseline),
            other => Err(format!(
                "unknown policy {other:?} (expected wm or baseline)"
            )),
        }
    }
}

/// A generated message awaiting a timing decision.
#[derive(Clone, Debug, PartialEq)]
pub struct AssistanceCandidate<S> {
    pub id: CandidateId,
    pub message: String,
    /// Always phonological: assistance is spoken.
    pub modality: Modality,
    /// Fixed at generation.
    pub importance: S,
    pub embedding: Embedding<S>,
    pub created_at: S,
    /// Every evaluation so far, oldest first.
    pub evaluations: Vec<UtilityBreakdown<S>>,
}

impl<S: Scalar> AssistanceCandidate<S> {
    pub fn new(
        id: CandidateId,
        generated: GeneratedAssistance<S>,
        embedding: Embedding<S>,
        created_at: S,
    ) -> Self {
        Self {
            id,
            message: generated.message,
            modality: Modality::Phonological,
            importance: generated.importance,
            embedding,
            created_at,
            evaluations: Vec::new(),
        }
    }

    pub fn age(&self, now: S) -> S {
        now - self.created_at
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Deliver,
    Defer,
    Discard,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityBreakdown<S> {
    pub at: S,
    /// Candidate importance `I`.
    pub importance_term: S,
    /// Candidate relevance `R` against the episodic buffer.
    pub relevance_term: S,
    pub value: S,
    pub c_displacement: S,
    pub c_interference: S,
    pub utility: S,
    pub decision: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionKind {
    Deliver,
    Defer,
    Discard,
    Expire,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Deserialize<'de>"))]
pub struct Decision<S> {
    pub kind: DecisionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakdown: Option<UtilityBreakdown<S>>,
}

impl<S> Decision<S> {
    pub fn expire() -> Self {
        Self {
            kind: DecisionKind::Expire,
            breakdown: None,
        }
    }
}

/// What actually happened to a candidate at one update. Differs from the
/// decision only when a second deliverable candidate is held back because
/// an update delivers at most one message per source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Delivered,
    Deferred,
    Discarded,
    Expired,
}

/// `(value, I, R)` with `value = w_importance * I + w_relevance * R`.
pub fn assistance_value<S: Scalar>(
    candidate: &AssistanceCandidate<S>,
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<(S, S, S), WmError> {
    if candidate.embedding.dim() != config.embedding_dim {
        return Err(WmError::DimensionMismatch {
            expected: config.embedding_dim,
            actual: candidate.embedding.dim(),
        });
    }
    let relevance = score_relevance(&candidate.embedding, &state.episodic)?;
    let importance = candidate.importance;
    let value = config.w_importance * importance + config.w_relevance * relevance;
    Ok((value, importance, relevance))
}

/// Composite score of the item a delivery would displace; 0 while the
/// perception store has a free slot.
pub fn displacement_cost<S: Scalar>(
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<S, WmError> {
    if state.perception.len() < config.capacity_items {
        return Ok(S::zero());
    }
    Ok(lowest_composite(state, config)?
        .map(|(_, s)| s)
        .unwrap_or_else(S::zero))
}

/// Mean dissimilarity `1 - sim` to perception items of the candidate's
/// modality; 0 when there are none.
pub fn interference_cost<S: Scalar>(
    candidate: &AssistanceCandidate<S>,
    state: &WorkingMemoryState<S>,
) -> Result<S, WmError> {
    let costs = state
        .perception
        .iter()
        .filter(|i| i.modality == candidate.modality)
        .map(|i| Ok(S::one() - clamped_similarity(&i.embedding, &candidate.embedding)?))
        .collect::<Result<Vec<S>, WmError>>()?;
    Ok(mean(costs).unwrap_or_else(S::zero))
}

/// Deliver above the threshold, discard at or below zero, defer between.
pub fn classify<S: Scalar>(utility: S, threshold: S) -> Verdict {
    if utility > threshold {
        Verdict::Deliver
    } else if utility <= S::zero() {
        Verdict::Discard
    } else {
        Verdict::Defer
    }
}

pub fn utility_breakdown<S: Scalar>(
    candidate: &AssistanceCandidate<S>,
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<UtilityBreakdown<S>, WmError> {
    let (value, importance_term, relevance_term) = assistance_value(candidate, state, config)?;
    let c_displacement = displacement_cost(state, config)?;
    let c_interference = interference_cost(candidate, state)?;
    let utility = value - (c_displacement + c_interference);
    Ok(UtilityBreakdown {
        at: state.now,
        importance_term,
        relevance_term,
        value,
        c_displacement,
        c_interference,
        utility,
        decision: classify(utility, config.utility_threshold),
    })
}

/// Scores `candidate` against the current state and records the breakdown
/// on it.
pub fn evaluate<S: Scalar>(
    candidate: &mut AssistanceCandidate<S>,
    state: &WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<Decision<S>, WmError> {
    if state.now < candidate.created_at {
        return Err(WmError::ClockRegression {
            now: state.now.as_f64(),
            last: candidate.created_at.as_f64(),
        });
    }
    let breakdown = utility_breakdown(candidate, state, config)?;
    candidate.evaluations.push(breakdown);
    let kind = match breakdown.decision {
        Verdict::Deliver => DecisionKind::Deliver,
        Verdict::Defer => DecisionKind::Defer,
        Verdict::Discard => DecisionKind::Discard,
    };
    Ok(Decision {
        kind,
        breakdown: Some(breakdown),
    })
}

/// Baseline policy: deliver anything the generator produced.
pub fn baseline_decide<S>(generated: Option<&GeneratedAssistance<S>>) -> Option<Decision<S>> {
    generated.map(|_| Decision {
        kind: DecisionKind::Deliver,
        breakdown: None,
    })
}

pub fn is_expired<S: Scalar>(candidate: &AssistanceCandidate<S>, now: S, ttl: Option<S>) -> bool {
    ttl.is_some_and(|ttl| candidate.age(now) > ttl)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeferredReview<S> {
    pub candidate_id: CandidateId,
    pub message: String,
    pub importance: S,
    pub decision: Decision<S>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, Default)]
pub struct DeferredPass<S> {
    pub reviews: Vec<DeferredReview<S>>,
    /// Candidate removed from the queue for delivery, if any.
    pub to_deliver: Option<AssistanceCandidate<S>>,
}

/// Re-evaluates the whole deferred queue. See [`process_deferred_head`].
pub fn process_deferred<S: Scalar>(
    state: &mut WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
) -> Result<DeferredPass<S>, WmError> {
    let n = state.deferred.len();
    process_deferred_head(state, config, n)
}

/// Re-evaluates the first `limit` queued candidates in FIFO order against
/// the current state.
///
/// Expired candidates (age strictly above `defer_ttl`) and discards are
/// dropped. The first deliverable candidate is taken out and returned for
/// delivery; later deliverable ones stay queued. Entries past `limit` are
/// untouched, so the queue never grows here.
pub fn process_deferred_head<S: Scalar>(
    state: &mut WorkingMemoryState<S>,
    config: &WeightsConfig<S>,
    limit: usize,
) -> Result<DeferredPass<S>, WmError> {
    let mut queue = std::mem::take(&mut state.deferred);
    let tail = queue.split_off(limit.min(queue.len()));
    let mut pass = DeferredPass {
        reviews: Vec::new(),
        to_deliver: None,
    };
    let mut kept = std::collections::VecDeque::with_capacity(queue.len() + tail.len());

    let mut result = Ok(());
    for mut candidate in queue {
        if result.is_err() {
            kept.push_back(candidate);
            continue;
        }
        if is_expired(&candidate, state.now, config.defer_ttl) {
            pass.reviews.push(DeferredReview {
                candidate_id: candidate.id,
                message: candidate.message.clone(),
                importance: candidate.importance,
                decision: Decision::expire(),
                outcome: Outcome::Expired,
            });
            continue;
        }
        let decision = match evaluate(&mut candidate, state, config) {
            Ok(d) => d,
            Err(e) => {
                result = Err(e);
                kept.push_back(candidate);
                continue;
            }
        };
        let outcome = match decision.kind {
            DecisionKind::Deliver if pass.to_deliver.is_none() => Outcome::Delivered,
            DecisionKind::Deliver | DecisionKind::Defer => Outcome::Deferred,
            DecisionKind::Discard => Outcome::Discarded,
            DecisionKind::Expire => Outcome::Expired,
        };
        pass.reviews.push(DeferredReview {
            candidate_id: candidate.id,
            message: candidate.message.clone(),
            importance: candidate.importance,
            decision,
            outcome,
        });
        match outcome {
            Outcome::Delivered => pass.to_deliver = Some(candidate),
            Outcome::Deferred => kept.push_back(candidate),
            Outcome::Discarded | Outcome::Expired => {}
        }
    }
    kept.extend(tail);
    state.deferred = kept;
    result.map(|_| pass)
}
