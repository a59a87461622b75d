//! Unit-norm embedding vectors and the similarity primitives built on them.

use crate::error::WmError;
use crate::scalar::Scalar;

/// An L2-normalized vector. Construction is the only normalization point,
/// so cosine similarity is a plain dot product.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding<S> {
    values: Vec<S>,
}

impl<S: Scalar> Embedding<S> {
    /// Normalizes `values`, rejecting vectors whose length is not `dim`.
    pub fn new(values: Vec<S>, dim: usize) -> Result<Self, WmError> {
        if values.len() != dim {
            return Err(WmError::DimensionMismatch {
                expected: dim,
                actual: values.len(),
            });
        }
        Self::normalized(values)
    }

    /// Normalizes `values` of any non-zero length.
    pub fn normalized(mut values: Vec<S>) -> Result<Self, WmError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(WmError::DegenerateVector);
        }
        let norm = values.iter().map(|&v| v * v).sum::<S>().sqrt();
        if norm <= S::zero() || !norm.is_finite() {
            return Err(WmError::DegenerateVector);
        }
        for v in values.iter_mut() {
            *v = *v / norm;
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<S> {
        self.values
    }

    /// Unit basis vector `e_axis` of dimension `dim`.
    pub fn basis(axis: usize, dim: usize) -> Result<Self, WmError> {
        let mut v = vec![S::zero(); dim];
        *v.get_mut(axis).ok_or(WmError::DimensionMismatch {
            expected: dim,
            actual: axis + 1,
        })? = S::one();
        Ok(Self { values: v })
    }

    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|&v| -v).collect(),
        }
    }
}

/// Cosine similarity of two unit vectors, clipped to `[-1, 1]` against
/// rounding.
pub fn cosine_similarity<S: Scalar>(a: &Embedding<S>, b: &Embedding<S>) -> Result<S, WmError> {
    if a.dim() != b.dim() {
        return Err(WmError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let dot: S = a.values.iter().zip(&b.values).map(|(&x, &y)| x * y).sum();
    Ok(dot.max(-S::one()).min(S::one()))
}

/// Cosine similarity with negative values floored at zero. Every score in
/// the engine (relevance, dedup, binding, interference) goes through this.
pub fn clamped_similarity<S: Scalar>(a: &Embedding<S>, b: &Embedding<S>) -> Result<S, WmError> {
    Ok(cosine_similarity(a, b)?.max(S::zero()))
}
