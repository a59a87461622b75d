//! Plain-text renderings for terminal output.

use std::fmt::Write;

use wmassist_core::chunking::{BindKind, Placement};
use wmassist_core::encoding::EncodeKind;
use wmassist_core::metrics::MetricsReport;
use wmassist_core::timing::DecisionKind;
use wmassist_core::trace::{CandidateSource, TraceRecord};
use wmassist_core::Outcome;

fn opt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |p| format!("{p:.1}%"))
}

type Row = (&'static str, fn(&MetricsReport) -> u64);

const ROWS: &[Row] = &[
    ("events", |m| m.events),
    ("encoded", |m| m.encoded),
    ("refreshed", |m| m.refreshed),
    ("displaced", |m| m.displaced),
    ("candidates generated", |m| m.candidates_generated),
    ("delivered", |m| m.delivered),
    ("  immediately", |m| m.delivered_immediately),
    ("  after deferral", |m| m.delivered_after_deferral),
    ("deferred", |m| m.deferred),
    ("deferred peak", |m| m.deferred_peak),
    ("discarded", |m| m.discarded),
    ("expired", |m| m.expired),
    ("still deferred", |m| m.still_deferred),
    ("provider errors", |m| m.provider_errors),
];

pub fn metrics(title: &str, m: &MetricsReport) -> String {
    let mut out = format!("{title}\n");
    for (label, get) in ROWS {
        let _ = writeln!(out, "  {label:<22} {}", get(m));
    }
    let _ = writeln!(
        out,
        "  {:<22} {}",
        "delivered rate",
        opt_pct(m.rates.delivered_pct)
    );
    out
}

pub fn comparison(
    name: &str,
    wm: &MetricsReport,
    baseline: &MetricsReport,
    ratio: Option<f64>,
) -> String {
    let mut out = format!(
        "scenario {name}\n  {:<22} {:>8} {:>8}\n",
        "", "wm", "baseline"
    );
    for (label, get) in ROWS {
        let _ = writeln!(out, "  {label:<22} {:>8} {:>8}", get(wm), get(baseline));
    }
    let ratio = ratio.map_or_else(|| "n/a".to_string(), |r| format!("{r:.3}"));
    let _ = writeln!(
        out,
        "selectivity delivered(wm)/delivered(baseline): {ratio}"
    );
    out
}

fn encode_label(r: &TraceRecord<f64>) -> String {
    match r.encode_outcome.as_ref().map(|o| &o.kind) {
        Some(EncodeKind::Added { item_id }) => format!("added {item_id}"),
        Some(EncodeKind::Refreshed { item_id }) => format!("refreshed {item_id}"),
        Some(EncodeKind::Displaced { victim_id, new_id }) => {
            format!("{new_id} displaced {victim_id}")
        }
        None => "not encoded".to_string(),
    }
}

fn bind_label(r: &TraceRecord<f64>) -> Option<String> {
    let b = r.bind_outcome.as_ref()?;
    Some(match &b.kind {
        BindKind::Bound { chunk_id, score } => format!("bound to {chunk_id} (score {score:.3})"),
        BindKind::Created { chunk_id } => format!("created {chunk_id}"),
        BindKind::CreatedWithDisplacement {
            new_chunk_id,
            evicted_chunk_id,
        } => {
            format!("created {new_chunk_id}, evicted {evicted_chunk_id}")
        }
    })
}

fn outcome_label(o: Outcome) -> &'static str {
    match o {
        Outcome::Delivered => "delivered",
        Outcome::Deferred => "deferred",
        Outcome::Discarded => "discarded",
        Outcome::Expired => "expired",
    }
}

pub fn summary(trace: &[TraceRecord<f64>], m: &MetricsReport) -> String {
    let mut out = format!("{} steps\n", trace.len());
    for r in trace {
        let delivered = r
            .candidates
            .iter()
            .filter(|c| c.outcome == Outcome::Delivered)
            .count();
        let _ = writeln!(
            out,
            "  step {:>4}  t={:<8} {:<6} {:<28} candidates={} delivered={} queued={}",
            r.step,
            r.t,
            r.event.kind,
            encode_label(r),
            r.candidates.len(),
            delivered,
            r.deferred_queue.len()
        );
    }
    if !trace.is_empty() {
        out.push_str(&metrics("totals", m));
    }
    out
}

pub fn step(r: &TraceRecord<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "step {}  t={}  policy={}", r.step, r.t, r.policy);
    let _ = writeln!(out, "event: {} {:?}", r.event.kind, r.event.content);
    let _ = writeln!(out, "encode: {}", encode_label(r));
    if let Some(b) = bind_label(r) {
        let _ = writeln!(out, "bind: {b}");
    }
    for rb in r
        .bind_outcome
        .iter()
        .flat_map(|b| &b.rebound)
        .chain(r.retried_bindings.iter().flat_map(|b| &b.rebound))
    {
        let place = match &rb.placement {
            Placement::Bound { chunk_id, .. } => format!("bound to {chunk_id}"),
            Placement::Created { chunk_id } => format!("created {chunk_id}"),
            Placement::Forced { chunk_id, .. } => format!("forced into {chunk_id}"),
            Placement::Unbound { error } => format!("unbound ({error})"),
        };
        let _ = writeln!(out, "  orphan {}: {place}", rb.item_id);
    }

    let snap = &r.wm_snapshot;
    let _ = writeln!(out, "perception ({} items):", snap.items.len());
    for i in &snap.items {
        let s = &i.scores;
        let _ = writeln!(
            out,
            "  {:<8} {:<13} rec={:.3} rel={:.3} imp={:.3} comp={:.3}  {:?}",
            i.id.to_string(),
            format!("{:?}", i.modality).to_lowercase(),
            s.recency,
            s.relevance,
            s.importance,
            s.composite,
            i.content
        );
    }
    let _ = writeln!(out, "episodic ({} chunks):", snap.chunks.len());
    for c in &snap.chunks {
        let members: Vec<String> = c.item_ids.iter().map(ToString::to_string).collect();
        let _ = writeln!(
            out,
            "  {:<9} [{}]  {:?}",
            c.id.to_string(),
            members.join(", "),
            c.summary
        );
    }
    if !snap.unbound.is_empty() {
        let ids: Vec<String> = snap.unbound.iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "unbound: {}", ids.join(", "));
    }

    let _ = writeln!(out, "candidates ({}):", r.candidates.len());
    for c in &r.candidates {
        let source = match c.source {
            CandidateSource::Fresh => "fresh",
            CandidateSource::Deferred => "queued",
        };
        let _ = writeln!(out, "  {} {source} {:?}", c.candidate_id, c.message);
        match (&c.decision.kind, &c.decision.breakdown) {
            (DecisionKind::Expire, _) => {
                let _ = writeln!(out, "    expired");
            }
            (_, None) => {
                let _ = writeln!(
                    out,
                    "    I={:.3} -> {}",
                    c.importance,
                    outcome_label(c.outcome)
                );
            }
            (_, Some(b)) => {
                let _ = writeln!(
                    out,
                    "    I={:.3} R={:.3} value={:.3} C_D={:.3} C_I={:.3} utility={:.3} -> {}",
                    b.importance_term,
                    b.relevance_term,
                    b.value,
                    b.c_displacement,
                    b.c_interference,
                    b.utility,
                    outcome_label(c.outcome)
                );
            }
        }
    }
    if !r.deferred_queue.is_empty() {
        let _ = writeln!(out, "deferred queue:");
        for q in &r.deferred_queue {
            let _ = writeln!(out, "  {} age={}  {:?}", q.candidate_id, q.age, q.message);
        }
    }
    for e in &r.errors {
        let _ = writeln!(out, "error at {:?}: {}", e.stage, e.error);
    }
    out
}
