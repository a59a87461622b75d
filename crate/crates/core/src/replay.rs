//! Deterministic replay of a scenario through one engine.

use std::ops::ControlFlow;

use crate::config::WeightsConfig;
use crate::engine::Engine;
use crate::error::WmError;
use crate::metrics::{compute_metrics, MetricsReport};
use crate::providers::Providers;
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::timing::Policy;
use crate::trace::TraceRecord;

#[derive(Clone, Debug, PartialEq)]
pub struct Replay<S> {
    pub trace: Vec<TraceRecord<S>>,
    pub metrics: MetricsReport,
    /// False when the observer stopped the replay early.
    pub completed: bool,
}

/// Replays every event, calling `observe` after each step. Returning
/// `Break` stops the replay after that step.
pub fn replay_with<S: Scalar>(
    scenario: &Scenario<S>,
    policy: Policy,
    providers: Providers<S>,
    base: &WeightsConfig<S>,
    mut observe: impl FnMut(&TraceRecord<S>) -> ControlFlow<()>,
) -> Result<Replay<S>, WmError> {
    let config = scenario.effective_config(base)?;
    let mut engine = Engine::new(config, providers, policy, scenario.task_context.clone())?;
    let mut trace = Vec::with_capacity(scenario.events.len());
    let mut completed = true;
    for event in &scenario.events {
        let record = engine.step(event)?;
        let flow = observe(&record);
        trace.push(record);
        if flow.is_break() {
            completed = false;
            break;
        }
    }
    let metrics = compute_metrics(&trace);
    Ok(Replay {
        trace,
        metrics,
        completed,
    })
}

pub fn replay<S: Scalar>(
    scenario: &Scenario<S>,
    policy: Policy,
    providers: Providers<S>,
    base: &WeightsConfig<S>,
) -> Result<Replay<S>, WmError> {
    replay_with(scenario, policy, providers, base, |_| {
        ControlFlow::Continue(())
    })
}

/// Replays with mock providers built from the scenario's effective config.
pub fn replay_mock<S: Scalar>(
    scenario: &Scenario<S>,
    policy: Policy,
    base: &WeightsConfig<S>,
) -> Result<Replay<S>, WmError> {
    let config = scenario.effective_config(base)?;
    replay(scenario, policy, Providers::mock(&config), base)
}
