//! One engine instance: working memory, providers, and a delivery policy,
//! advanced one event at a time.

use crate::chunking::{bind_or_create, BindOutcome};
use crate::config::WeightsConfig;
use crate::embedding::Embedding;
use crate::encoding::{encode_item, EncodeOutcome, ImportanceSource, NewItem};
use crate::error::WmError;
use crate::providers::{GeneratedAssistance, GenerationRequest, ProviderError, Providers};
use crate::scalar::Scalar;
use crate::scenario::ScenarioEvent;
use crate::timing::{
    baseline_decide, evaluate, process_deferred_head, AssistanceCandidate, DecisionKind, Outcome,
    Policy,
};
use crate::trace::{
    CandidateRecord, CandidateSource, DeliveryRecord, QueueEntry, Stage, StepError, TraceRecord,
    WmSnapshot,
};
use crate::types::{ItemId, Modality, WorkingMemoryState};

/// What one insertion did to the store and the episodic buffer.
type Ingested<S> = (Option<EncodeOutcome<S>>, Option<BindOutcome<S>>);

pub struct Engine<S: Scalar> {
    state: WorkingMemoryState<S>,
    config: WeightsConfig<S>,
    providers: Providers<S>,
    policy: Policy,
    task_context: String,
    history: Vec<String>,
    step: u64,
}

/// Splits provider failures (recorded, the step goes on) from contract
/// violations (the step aborts).
fn recoverable<T>(r: Result<T, WmError>) -> Result<Result<T, ProviderError>, WmError> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(WmError::Provider(e)) => Ok(Err(e)),
        Err(e) => Err(e),
    }
}

impl<S: Scalar> Engine<S> {
    pub fn new(
        config: WeightsConfig<S>,
        providers: Providers<S>,
        policy: Policy,
        task_context: impl Into<String>,
    ) -> Result<Self, WmError> {
        config.validate()?;
        Ok(Self {
            state: WorkingMemoryState::new(),
            config,
            providers,
            policy,
            task_context: task_context.into(),
            history: Vec::new(),
            step: 0,
        })
    }

    pub fn state(&self) -> &WorkingMemoryState<S> {
        &self.state
    }

    pub fn config(&self) -> &WeightsConfig<S> {
        &self.config
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// Messages delivered so far.
    pub fn history(&self) -> &[String] {
        &self.history
    }

    /// Encodes and binds one item, recording provider failures.
    fn perceive(
        &mut self,
        item: NewItem<S>,
        errors: &mut Vec<StepError>,
        stage: Stage,
    ) -> Result<Ingested<S>, WmError> {
        let encoded = recoverable(encode_item(
            &mut self.state,
            item,
            &self.providers,
            &self.config,
            &self.task_context,
        ))?;
        let outcome = match encoded {
            Ok(o) => o,
            Err(error) => {
                errors.push(StepError { stage, error });
                return Ok((None, None));
            }
        };
        let Some(new_id) = outcome.inserted() else {
            return Ok((Some(outcome), None));
        };
        let bound = recoverable(bind_or_create(
            &mut self.state,
            new_id,
            &self.providers,
            &self.config,
            &self.task_context,
        ))?;
        match bound {
            Ok(b) => Ok((Some(outcome), Some(b))),
            Err(error) => {
                errors.push(StepError {
                    stage: Stage::Bind,
                    error,
                });
                Ok((Some(outcome), None))
            }
        }
    }

    fn retry_unbound(
        &mut self,
        pending: &[ItemId],
        errors: &mut Vec<StepError>,
    ) -> Result<Vec<BindOutcome<S>>, WmError> {
        let mut out = Vec::new();
        for &id in pending {
            if !self.state.unbound.contains(&id) {
                continue;
            }
            match recoverable(bind_or_create(
                &mut self.state,
                id,
                &self.providers,
                &self.config,
                &self.task_context,
            ))? {
                Ok(b) => out.push(b),
                Err(error) => errors.push(StepError {
                    stage: Stage::Rebind,
                    error,
                }),
            }
        }
        Ok(out)
    }

    fn generate(
        &mut self,
        newest: Option<ItemId>,
        event: &ScenarioEvent<S>,
        errors: &mut Vec<StepError>,
    ) -> Vec<GeneratedAssistance<S>> {
        let request = GenerationRequest {
            policy: self.policy,
            task_context: &self.task_context,
            newest_item: newest.and_then(|id| self.state.item(id)),
            perception: &self.state.perception,
            episodes: self
                .state
                .episodic
                .iter()
                .map(|c| c.summary.as_str())
                .collect(),
            history: &self.history,
            hints: event.hints(),
        };
        let generated = match self.providers.generator.generate(&request) {
            Ok(g) => g,
            Err(error) => {
                errors.push(StepError {
                    stage: Stage::Generate,
                    error,
                });
                return Vec::new();
            }
        };
        generated
            .into_iter()
            .filter(|g| {
                let problem = if g.message.trim().is_empty() {
                    Some("empty assistance message".to_string())
                } else if !g.importance.in_unit() {
                    Some(format!(
                        "assistance importance {} outside [0,1]",
                        g.importance
                    ))
                } else {
                    None
                };
                if let Some(detail) = &problem {
                    errors.push(StepError {
                        stage: Stage::Generate,
                        error: ProviderError::malformed(detail.clone()),
                    });
                }
                problem.is_none()
            })
            .collect()
    }

    fn make_candidate(
        &mut self,
        generated: GeneratedAssistance<S>,
        errors: &mut Vec<StepError>,
    ) -> Option<AssistanceCandidate<S>> {
        let embedded = self
            .providers
            .embedder
            .embed(&generated.message, Modality::Phonological)
            .and_then(|e| {
                if e.dim() == self.config.embedding_dim {
                    Ok(e)
                } else {
                    Err(ProviderError::malformed(format!(
                        "message embedding has dimension {}",
                        e.dim()
                    )))
                }
            });
        match embedded {
            Ok(embedding) => {
                let id = self.state.next_candidate_id();
                Some(AssistanceCandidate::new(
                    id,
                    generated,
                    embedding,
                    self.state.now,
                ))
            }
            Err(error) => {
                errors.push(StepError {
                    stage: Stage::EmbedCandidate,
                    error,
                });
                None
            }
        }
    }

    /// Emits a message and encodes it as a phonological item carrying the
    /// candidate's importance.
    fn deliver(
        &mut self,
        candidate: AssistanceCandidate<S>,
        errors: &mut Vec<StepError>,
    ) -> Result<DeliveryRecord<S>, WmError> {
        let item = NewItem {
            modality: Modality::Phonological,
            content: candidate.message.clone(),
            embedding: Some(candidate.embedding),
            importance: ImportanceSource::Fixed(candidate.importance),
        };
        let (encode_outcome, bind_outcome) = self.perceive(item, errors, Stage::Deliver)?;
        self.history.push(candidate.message.clone());
        Ok(DeliveryRecord {
            candidate_id: candidate.id,
            message: candidate.message,
            encode_outcome,
            bind_outcome,
        })
    }

    /// Processes one event: encode, bind, generate, decide, and (for the
    /// working-memory policy) revisit the deferred queue.
    ///
    /// Provider failures are recorded on the returned record. Errors are
    /// returned only for contract violations such as a clock regression.
    pub fn step(&mut self, event: &ScenarioEvent<S>) -> Result<TraceRecord<S>, WmError> {
        self.state.advance_to(event.t)?;
        let embedding = event
            .embedding
            .clone()
            .map(|v| Embedding::new(v, self.config.embedding_dim))
            .transpose()?;
        let mut errors = Vec::new();
        let pending: Vec<ItemId> = self.state.unbound.clone();

        let item = NewItem {
            modality: event.kind.modality(),
            content: event.content.clone(),
            embedding,
            importance: ImportanceSource::Scorer {
                supplied: event.importance,
            },
        };
        let (encode_outcome, bind_outcome) = self.perceive(item, &mut errors, Stage::Encode)?;
        let retried_bindings = self.retry_unbound(&pending, &mut errors)?;

        let newest = encode_outcome.as_ref().map(|o| o.item_id());
        let generated = self.generate(newest, event, &mut errors);
        let fresh: Vec<_> = generated
            .into_iter()
            .filter_map(|g| self.make_candidate(g, &mut errors))
            .collect();

        let mut candidates = Vec::new();
        let mut deliveries = Vec::new();
        match self.policy {
            Policy::Baseline => {
                for candidate in fresh {
                    let generated = GeneratedAssistance {
                        message: candidate.message.clone(),
                        importance: candidate.importance,
                    };
                    let Some(decision) = baseline_decide(Some(&generated)) else {
                        continue;
                    };
                    candidates.push(CandidateRecord {
                        candidate_id: candidate.id,
                        source: CandidateSource::Fresh,
                        message: candidate.message.clone(),
                        importance: candidate.importance,
                        decision,
                        outcome: Outcome::Delivered,
                    });
                    deliveries.push(self.deliver(candidate, &mut errors)?);
                }
            }
            Policy::Wm => {
                let queued_before = self.state.deferred.len();
                let mut chosen = None;
                for mut candidate in fresh {
                    let decision = evaluate(&mut candidate, &self.state, &self.config)?;
                    let outcome = match decision.kind {
                        DecisionKind::Deliver if chosen.is_none() => Outcome::Delivered,
                        DecisionKind::Deliver | DecisionKind::Defer => Outcome::Deferred,
                        DecisionKind::Discard => Outcome::Discarded,
                        DecisionKind::Expire => Outcome::Expired,
                    };
                    candidates.push(CandidateRecord {
                        candidate_id: candidate.id,
                        source: CandidateSource::Fresh,
                        message: candidate.message.clone(),
                        importance: candidate.importance,
                        decision,
                        outcome,
                    });
                    match outcome {
                        Outcome::Delivered => chosen = Some(candidate),
                        Outcome::Deferred => self.state.deferred.push_back(candidate),
                        Outcome::Discarded | Outcome::Expired => {}
                    }
                }
                if let Some(candidate) = chosen {
                    deliveries.push(self.deliver(candidate, &mut errors)?);
                }

                let pass = process_deferred_head(&mut self.state, &self.config, queued_before)?;
                for review in pass.reviews {
                    candidates.push(CandidateRecord {
                        candidate_id: review.candidate_id,
                        source: CandidateSource::Deferred,
                        message: review.message,
                        importance: review.importance,
                        decision: review.decision,
                        outcome: review.outcome,
                    });
                }
                if let Some(candidate) = pass.to_deliver {
                    deliveries.push(self.deliver(candidate, &mut errors)?);
                }
            }
        }

        let record = TraceRecord {
            step: self.step,
            t: event.t,
            policy: self.policy,
            event: event.clone(),
            encode_outcome,
            bind_outcome,
            retried_bindings,
            candidates,
            deliveries,
            wm_snapshot: WmSnapshot::capture(&self.state, &self.config)?,
            deferred_queue: self
                .state
                .deferred
                .iter()
                .map(|c| QueueEntry {
                    candidate_id: c.id,
                    message: c.message.clone(),
                    age: c.age(self.state.now),
                })
                .collect(),
            errors,
        };
        self.step += 1;
        Ok(record)
    }
}
