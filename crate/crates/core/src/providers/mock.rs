//! Deterministic providers for replay and tests.

use std::collections::HashSet;

use crate::embedding::Embedding;
use crate::scalar::Scalar;
use crate::types::{MemoryItem, Modality};

use super::{
    AssistHint, AssistanceGenerator, Embedder, GeneratedAssistance, GenerationRequest,
    ImportanceRequest, ImportanceScorer, ProviderError, Summarizer,
};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// SplitMix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        Self(state)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[-1, 1)` from the top 53 bits.
    pub fn next_signed_unit(&mut self) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * u - 1.0
    }
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(content: &str) -> Vec<String> {
    content
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Bag-of-tokens embedder.
///
/// Each token seeds a SplitMix64 stream with `fnv1a64(token) ^ seed` and
/// draws `dim` values in `[-1, 1)`. Token vectors are summed in `f64` and
/// the sum is L2-normalized. Texts sharing tokens therefore point in
/// similar directions; unrelated texts are near-orthogonal.
#[derive(Clone, Debug)]
pub struct MockEmbedder {
    dim: usize,
    seed: u64,
}

impl MockEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    pub fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut rng = SplitMix64::new(fnv1a64(token.as_bytes()) ^ self.seed);
        (0..self.dim).map(|_| rng.next_signed_unit()).collect()
    }
}

impl<S: Scalar> Embedder<S> for MockEmbedder {
    fn embed(&self, content: &str, _modality: Modality) -> Result<Embedding<S>, ProviderError> {
        let tokens = tokenize(content);
        if tokens.is_empty() {
            return Err(ProviderError::malformed(format!(
                "cannot embed content without tokens: {content:?}"
            )));
        }
        let mut sum = vec![0.0f64; self.dim];
        for token in &tokens {
            for (acc, v) in sum.iter_mut().zip(self.token_vector(token)) {
                *acc += v;
            }
        }
        let values = sum.into_iter().map(S::lit).collect();
        Embedding::new(values, self.dim).map_err(|e| ProviderError::malformed(e.to_string()))
    }
}

/// Returns the scenario-supplied importance, or `default` when none is given.
#[derive(Clone, Debug)]
pub struct MockImportanceScorer {
    pub default: f64,
}

impl Default for MockImportanceScorer {
    fn default() -> Self {
        Self { default: 0.5 }
    }
}

impl<S: Scalar> ImportanceScorer<S> for MockImportanceScorer {
    fn score(&self, request: &ImportanceRequest<'_, S>) -> Result<S, ProviderError> {
        Ok(request.supplied.unwrap_or_else(|| S::lit(self.default)))
    }
}

/// `"User context: a, b, c"` over member contents.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockSummarizer;

impl<S: Scalar> Summarizer<S> for MockSummarizer {
    fn summarize(
        &self,
        items: &[&MemoryItem<S>],
        _task_context: &str,
    ) -> Result<String, ProviderError> {
        if items.is_empty() {
            return Err(ProviderError::malformed("summary requested for zero items"));
        }
        let labels: Vec<&str> = items.iter().map(|i| i.content.as_str()).collect();
        Ok(format!("User context: {}", labels.join(", ")))
    }
}

/// Emits scripted hints once their trigger label is in perception memory.
///
/// Hints are registered when the event carrying them is processed. Each is
/// emitted at most once. Output is sorted by importance, highest first,
/// with registration order breaking ties.
#[derive(Clone, Debug, Default)]
pub struct MockGenerator<S> {
    pending: Vec<AssistHint<S>>,
    emitted: HashSet<(String, String)>,
}

impl<S: Scalar> MockGenerator<S> {
    pub fn pending(&self) -> &[AssistHint<S>] {
        &self.pending
    }
}

fn label_key(s: &str) -> String {
    s.trim().to_lowercase()
}

impl<S: Scalar> AssistanceGenerator<S> for MockGenerator<S> {
    fn generate(
        &mut self,
        request: &GenerationRequest<'_, S>,
    ) -> Result<Vec<GeneratedAssistance<S>>, ProviderError> {
        for hint in request.hints {
            let key = (label_key(&hint.trigger), hint.message.clone());
            let queued = self
                .pending
                .iter()
                .any(|h| label_key(&h.trigger) == key.0 && h.message == key.1);
            if !queued && !self.emitted.contains(&key) {
                self.pending.push(hint.clone());
            }
        }
        let present: HashSet<String> = request
            .perception
            .iter()
            .map(|i| label_key(&i.content))
            .collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.pending.len() {
            if present.contains(&label_key(&self.pending[i].trigger)) {
                let hint = self.pending.remove(i);
                self.emitted
                    .insert((label_key(&hint.trigger), hint.message.clone()));
                out.push(GeneratedAssistance {
                    message: hint.message,
                    importance: hint.importance,
                });
            } else {
                i += 1;
            }
        }
        out.sort_by(|a, b| crate::scalar::cmp(b.importance, a.importance));
        Ok(out)
    }
}
