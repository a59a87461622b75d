//! Engine weights, thresholds, and capacities.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::WmError;
use crate::scalar::Scalar;

/// Every tunable of the model. Defaults reproduce the reference setup:
/// composite weights 0.3/0.4/0.3, binding weight 0.6 with threshold 0.5,
/// a 30 s retention bound, value weights 0.6/0.4, delivery threshold 0.75,
/// duplicate threshold 0.95, and capacities of seven items and four chunks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig<S> {
    /// Composite weight on recency.
    pub alpha: S,
    /// Composite weight on relevance.
    pub beta: S,
    /// Composite weight on importance.
    pub gamma: S,
    /// Binding weight on episode similarity; `1 - lambda` goes to item similarity.
    pub lambda: S,
    /// Binding threshold; an item binds only when its best score is strictly above it.
    pub theta: S,
    /// Retention bound in seconds after which recency reaches zero.
    #[serde(rename = "T")]
    pub retention: S,
    pub w_importance: S,
    pub w_relevance: S,
    pub utility_threshold: S,
    pub dedup_threshold: S,
    pub capacity_items: usize,
    pub capacity_chunks: usize,
    pub embedding_dim: usize,
    /// Seconds a deferred candidate may wait; `None` never expires.
    pub defer_ttl: Option<S>,
    pub seed: u64,
}

impl<S: Scalar> Default for WeightsConfig<S> {
    fn default() -> Self {
        Self {
            alpha: S::lit(0.3),
            beta: S::lit(0.4),
            gamma: S::lit(0.3),
            lambda: S::lit(0.6),
            theta: S::lit(0.5),
            retention: S::lit(30.0),
            w_importance: S::lit(0.6),
            w_relevance: S::lit(0.4),
            utility_threshold: S::lit(0.75),
            dedup_threshold: S::lit(0.95),
            capacity_items: 7,
            capacity_chunks: 4,
            embedding_dim: 64,
            defer_ttl: Some(S::lit(60.0)),
            seed: 0,
        }
    }
}

impl<S: Scalar> WeightsConfig<S> {
    pub fn validate(&self) -> Result<(), WmError> {
        let bad = |msg: &str| Err(WmError::InvalidConfig(msg.to_string()));
        let all = [
            self.alpha,
            self.beta,
            self.gamma,
            self.lambda,
            self.theta,
            self.retention,
            self.w_importance,
            self.w_relevance,
            self.utility_threshold,
            self.dedup_threshold,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("weights and thresholds must be finite");
        }
        if [self.alpha, self.beta, self.gamma]
            .iter()
            .any(|&w| w < S::zero())
        {
            return bad("alpha, beta, gamma must be non-negative");
        }
        if (self.alpha + self.beta + self.gamma - S::one()).abs() > S::lit(1e-9).max(S::epsilon()) {
            return bad("alpha + beta + gamma must equal 1");
        }
        if !self.lambda.in_unit() || !self.theta.in_unit() || !self.dedup_threshold.in_unit() {
            return bad("lambda, theta, dedup_threshold must lie in [0,1]");
        }
        if self.retention <= S::zero() {
            return bad("T must be positive");
        }
        if self.w_importance < S::zero() || self.w_relevance < S::zero() {
            return bad("w_importance and w_relevance must be non-negative");
        }
        if let Some(ttl) = self.defer_ttl {
            if ttl < S::zero() || ttl.is_nan() {
                return bad("defer_ttl must be non-negative");
            }
        }
        if self.capacity_items < 1 || self.capacity_chunks < 1 {
            return bad("capacities must be at least 1");
        }
        if self.embedding_dim < 1 {
            return bad("embedding_dim must be at least 1");
        }
        Ok(())
    }
}

/// Partial config: any subset of [`WeightsConfig`] keys. Used for scenario
/// overrides and config files. Unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsOverrides<S> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<S>,
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub retention: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_importance: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_relevance: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility_threshold: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dedup_threshold: Option<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_items: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity_chunks: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
    /// `Some(None)` (JSON `null`) disables expiry.
    #[serde(
        default,
        deserialize_with = "present_or_null",
        skip_serializing_if = "Option::is_none"
    )]
    pub defer_ttl: Option<Option<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn present_or_null<'de, D, T>(de: D) -> Result<Option<Option<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    Option::<T>::deserialize(de).map(Some)
}

impl<S: Scalar> WeightsOverrides<S> {
    /// Applies the present keys on top of `base` and validates the result.
    pub fn apply(&self, base: &WeightsConfig<S>) -> Result<WeightsConfig<S>, WmError> {
        let cfg = WeightsConfig {
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta.unwrap_or(base.beta),
            gamma: self.gamma.unwrap_or(base.gamma),
            lambda: self.lambda.unwrap_or(base.lambda),
            theta: self.theta.unwrap_or(base.theta),
            retention: self.retention.unwrap_or(base.retention),
            w_importance: self.w_importance.unwrap_or(base.w_importance),
            w_relevance: self.w_relevance.unwrap_or(base.w_relevance),
            utility_threshold: self.utility_threshold.unwrap_or(base.utility_threshold),
            dedup_threshold: self.dedup_threshold.unwrap_or(base.dedup_threshold),
            capacity_items: self.capacity_items.unwrap_or(base.capacity_items),
            capacity_chunks: self.capacity_chunks.unwrap_or(base.capacity_chunks),
            embedding_dim: self.embedding_dim.unwrap_or(base.embedding_dim),
            defer_ttl: self.defer_ttl.unwrap_or(base.defer_ttl),
            seed: self.seed.unwrap_or(base.seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = WeightsConfig::<f64>::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.capacity_items, 7);
        assert_eq!(cfg.capacity_chunks, 4);
        WeightsConfig::<f32>::default().validate().unwrap();
    }

    #[test]
    fn weights_must_sum_to_one() {
        let cfg = WeightsConfig::<f64> {
            alpha: 0.5,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(WmError::InvalidConfig(_))));
    }

    #[test]
    fn range_checks() {
        let base = WeightsConfig::<f64>::default();
        for cfg in [
            WeightsConfig {
                theta: 1.5,
                ..base.clone()
            },
            WeightsConfig {
                retention: 0.0,
                ..base.clone()
            },
            WeightsConfig {
                defer_ttl: Some(-1.0),
                ..base.clone()
            },
            WeightsConfig {
                capacity_items: 0,
                ..base.clone()
            },
            WeightsConfig {
                dedup_threshold: -0.1,
                ..base.clone()
            },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn overrides_merge_and_reject_unknown_keys() {
        let o: WeightsOverrides<f64> =
            serde_json::from_str(r#"{"T": 15, "defer_ttl": null, "seed": 9}"#).unwrap();
        let cfg = o.apply(&WeightsConfig::default()).unwrap();
        assert_eq!(cfg.retention, 15.0);
        assert_eq!(cfg.defer_ttl, None);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.alpha, 0.3);

        let o: WeightsOverrides<f64> = serde_json::from_str(r#"{"theta": 0.4}"#).unwrap();
        assert_eq!(
            o.apply(&WeightsConfig::default()).unwrap().defer_ttl,
            Some(60.0)
        );

        assert!(serde_json::from_str::<WeightsOverrides<f64>>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn config_serializes_retention_as_t() {
        let json = serde_json::to_value(WeightsConfig::<f64>::default()).unwrap();
        assert_eq!(json["T"], 30.0);
    }
}
