//! Aggregate counts over a trace.

use serde::{Deserialize, Serialize};

use crate::encoding::EncodeKind;
use crate::scalar::Scalar;
use crate::timing::Outcome;
use crate::trace::{CandidateSource, TraceRecord};

/// `num / den` scaled by `scale` and rounded half-up to one decimal, using
/// integer arithmetic only. `None` when `den` is zero.
pub fn rounded_ratio(num: u64, den: u64, scale: u64) -> Option<f64> {
    if den == 0 {
        return None;
    }
    let num = u128::from(num) * u128::from(scale) * 10;
    let den = u128::from(den);
    let tenths = (2 * num + den) / (2 * den);
    Some(tenths as f64 / 10.0)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    /// Percentage of events that produced at least one candidate.
    pub events_with_candidates_pct: Option<f64>,
    pub candidates_per_event: Option<f64>,
    /// Percentages of generated candidates.
    pub delivered_pct: Option<f64>,
    pub delivered_immediately_pct: Option<f64>,
    pub deferred_pct: Option<f64>,
    pub discarded_pct: Option<f64>,
    pub expired_pct: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub events: u64,
    /// Event-level encodings that inserted a new item.
    pub encoded: u64,
    pub refreshed: u64,
    pub displaced: u64,
    pub candidates_generated: u64,
    pub delivered: u64,
    pub delivered_immediately: u64,
    pub delivered_after_deferral: u64,
    /// Candidates deferred at least once.
    pub deferred: u64,
    pub deferred_peak: u64,
    pub discarded: u64,
    pub expired: u64,
    /// Left in the queue after the last step.
    pub still_deferred: u64,
    pub provider_errors: u64,
    pub rates: Rates,
}

impl MetricsReport {
    /// Every generated candidate is delivered, discarded, expired, or still
    /// queued, exactly once.
    pub fn is_conserved(&self) -> bool {
        self.delivered + self.discarded + self.expired + self.still_deferred
            == self.candidates_generated
            && self.delivered_immediately + self.delivered_after_deferral == self.delivered
    }
}

pub fn compute_metrics<S: Scalar>(trace: &[TraceRecord<S>]) -> MetricsReport {
    let mut m = MetricsReport {
        events: trace.len() as u64,
        ..Default::default()
    };
    let mut events_with_candidates = 0u64;
    for record in trace {
        match record.encode_outcome.as_ref().map(|o| &o.kind) {
            Some(EncodeKind::Added { .. }) => m.encoded += 1,
            Some(EncodeKind::Displaced { .. }) => {
                m.encoded += 1;
                m.displaced += 1;
            }
            Some(EncodeKind::Refreshed { .. }) => m.refreshed += 1,
            None => {}
        }
        let mut fresh_here = 0u64;
        for c in &record.candidates {
            match c.source {
                CandidateSource::Fresh => {
                    fresh_here += 1;
                    match c.outcome {
                        Outcome::Delivered => m.delivered_immediately += 1,
                        Outcome::Deferred => m.deferred += 1,
                        Outcome::Discarded => m.discarded += 1,
                        Outcome::Expired => m.expired += 1,
                    }
                }
                CandidateSource::Deferred => match c.outcome {
                    Outcome::Delivered => m.delivered_after_deferral += 1,
                    Outcome::Discarded => m.discarded += 1,
                    Outcome::Expired => m.expired += 1,
                    Outcome::Deferred => {}
                },
            }
        }
        if fresh_here > 0 {
            events_with_candidates += 1;
        }
        m.candidates_generated += fresh_here;
        m.deferred_peak = m.deferred_peak.max(record.deferred_queue.len() as u64);
        m.provider_errors += record.errors.len() as u64;
    }
    m.delivered = m.delivered_immediately + m.delivered_after_deferral;
    m.still_deferred = trace.last().map_or(0, |r| r.deferred_queue.len() as u64);

    let gen = m.candidates_generated;
    m.rates = Rates {
        events_with_candidates_pct: rounded_ratio(events_with_candidates, m.events, 100),
        candidates_per_event: rounded_ratio(gen, m.events, 1),
        delivered_pct: rounded_ratio(m.delivered, gen, 100),
        delivered_immediately_pct: rounded_ratio(m.delivered_immediately, gen, 100),
        deferred_pct: rounded_ratio(m.deferred, gen, 100),
        discarded_pct: rounded_ratio(m.discarded, gen, 100),
        expired_pct: rounded_ratio(m.expired, gen, 100),
    };
    m
}
