//! Straight-line reimplementations of the scoring formulas over plain
//! `f64` slices, with the default weights written out as literals. Shared
//! by the acceptance suite and the property tests; deliberately uses none
//! of the library's scoring code.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use wmassist_core::{Embedding, MemoryChunk, MemoryItem, WorkingMemoryState};

pub const ALPHA: f64 = 0.3;
pub const BETA: f64 = 0.4;
pub const GAMMA: f64 = 0.3;
pub const LAMBDA: f64 = 0.6;
pub const RETENTION: f64 = 30.0;
pub const W_IMPORTANCE: f64 = 0.6;
pub const W_RELEVANCE: f64 = 0.4;
pub const THRESHOLD: f64 = 0.75;
pub const CAPACITY: usize = 7;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Cosine of two unit vectors, clipped to [-1, 1] and then floored at 0.
#[allow(clippy::manual_clamp)]
pub fn sim(a: &[f64], b: &[f64]) -> f64 {
    let mut c = dot(a, b);
    if c > 1.0 {
        c = 1.0;
    }
    if c < 0.0 {
        c = 0.0;
    }
    c
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut s = 0.0;
    for &x in xs {
        s += x;
    }
    s / xs.len() as f64
}

pub fn recency(now: f64, last: f64) -> f64 {
    let r = 1.0 - (now - last) / RETENTION;
    if r < 0.0 {
        0.0
    } else {
        r
    }
}

pub fn composite(rec: f64, rel: f64, imp: f64) -> f64 {
    ALPHA * rec + BETA * rel + GAMMA * imp
}

pub fn relevance(e: &[f64], summaries: &[&[f64]]) -> f64 {
    let sims: Vec<f64> = summaries.iter().map(|s| sim(e, s)).collect();
    mean(&sims)
}

pub fn binding(item: &[f64], summary: &[f64], members: &[&[f64]]) -> f64 {
    let member_sims: Vec<f64> = members.iter().map(|m| sim(item, m)).collect();
    LAMBDA * sim(item, summary) + (1.0 - LAMBDA) * mean(&member_sims)
}

pub fn value(importance: f64, relevance: f64) -> f64 {
    W_IMPORTANCE * importance + W_RELEVANCE * relevance
}

/// Straight-line rule: deliver above 0.75, discard at or below 0, defer otherwise.
pub fn decide(utility: f64) -> &'static str {
    if utility > THRESHOLD {
        "deliver"
    } else if utility <= 0.0 {
        "discard"
    } else {
        "defer"
    }
}

/// Oracle view of a state: per-item composite at `state.now`, in store order.
pub fn composites(state: &WorkingMemoryState<f64>) -> Vec<f64> {
    let summaries: Vec<&[f64]> = state
        .episodic
        .iter()
        .map(|c| c.summary_embedding.as_slice())
        .collect();
    state
        .perception
        .iter()
        .map(|i| {
            composite(
                recency(state.now, i.last_activated_at),
                relevance(i.embedding.as_slice(), &summaries),
                i.importance,
            )
        })
        .collect()
}

pub fn displacement_cost(state: &WorkingMemoryState<f64>) -> f64 {
    if state.perception.len() < CAPACITY {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for c in composites(state) {
        if c < best {
            best = c;
        }
    }
    best
}

pub fn interference_cost(candidate: &[f64], phonological: &[&[f64]]) -> f64 {
    let costs: Vec<f64> = phonological
        .iter()
        .map(|p| 1.0 - sim(candidate, p))
        .collect();
    mean(&costs)
}

pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Embedding<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Ok(e) = Embedding::normalized(v) {
            return e;
        }
    }
}

/// A random valid state: `n_items` items partitioned over up to four
/// chunks with random summary embeddings. `pool` restricts embeddings to
/// a few shared vectors so that scores tie often.
pub fn random_state(
    rng: &mut ChaCha8Rng,
    n_items: usize,
    dim: usize,
    pool: Option<&[Embedding<f64>]>,
    coarse: bool,
) -> WorkingMemoryState<f64> {
    use wmassist_core::{ChunkId, ItemId, Modality};
    let mut state = WorkingMemoryState::new();
    state.now = if coarse {
        40.0
    } else {
        rng.gen_range(0.0..60.0)
    };
    let pick = |rng: &mut ChaCha8Rng| match pool {
        Some(p) => p[rng.gen_range(0..p.len())].clone(),
        None => random_unit(rng, dim),
    };
    for k in 0..n_items {
        let (encoded_at, last) = if coarse {
            let e = [0.0, 10.0, 20.0][rng.gen_range(0..3)];
            (e, e + [0.0, 10.0][rng.gen_range(0..2)])
        } else {
            let e = rng.gen_range(0.0..=state.now);
            (e, rng.gen_range(e..=state.now))
        };
        let importance = if coarse {
            [0.0, 0.5, 1.0][rng.gen_range(0..3)]
        } else {
            rng.gen_range(0.0..=1.0)
        };
        state.perception.push(MemoryItem {
            id: ItemId(k as u64 * 3 + 1),
            modality: if rng.gen_bool(0.5) {
                Modality::Visuospatial
            } else {
                Modality::Phonological
            },
            content: format!("item {k}"),
            embedding: pick(rng),
            encoded_at,
            last_activated_at: last,
            importance,
        });
    }
    if n_items > 0 {
        let n_chunks = rng.gen_range(1..=n_items.min(4));
        let mut members: Vec<Vec<ItemId>> = vec![Vec::new(); n_chunks];
        for (k, item) in state.perception.iter().enumerate() {
            let slot = if k < n_chunks {
                k
            } else {
                rng.gen_range(0..n_chunks)
            };
            members[slot].push(item.id);
        }
        for (c, item_ids) in members.into_iter().enumerate() {
            state.episodic.push(MemoryChunk {
                id: ChunkId(c as u64 * 5 + 2),
                created_at: if coarse {
                    [0.0, 10.0][rng.gen_range(0..2)]
                } else {
                    rng.gen_range(0.0..=state.now)
                },
                summary: format!("User context: chunk {c}"),
                summary_embedding: pick(rng),
                item_ids,
            });
        }
    }
    state
}
