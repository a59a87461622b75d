//! The `--config` file: weight keys at the top level plus a `provider`
//! section.

use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use serde_json::Value;
use wmassist_core::providers::remote::RemoteClient;
use wmassist_core::{Providers, WeightsConfig, WeightsOverrides};

use crate::error::CliError;

pub const ENDPOINT_ENV: &str = "WMASSIST_ENDPOINT";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    #[default]
    Mock,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSection {
    #[serde(default)]
    pub mode: ProviderMode,
    pub endpoint: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_timeout() -> f64 {
    10.0
}

impl Default for ProviderSection {
    fn default() -> Self {
        Self {
            mode: ProviderMode::Mock,
            endpoint: None,
            timeout_s: default_timeout(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CliConfig {
    pub weights: WeightsConfig<f64>,
    pub provider: ProviderSection,
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let invalid = |e: &dyn std::fmt::Display| CliError::InvalidConfig(format!("config: {e}"));
        let mut value: Value = serde_json::from_str(text).map_err(|e| invalid(&e))?;
        let Some(map) = value.as_object_mut() else {
            return Err(CliError::InvalidConfig(
                "config: expected a JSON object".into(),
            ));
        };
        let provider = match map.remove("provider") {
            Some(p) => {
                ProviderSection::deserialize(p).map_err(|e| invalid(&format!("provider: {e}")))?
            }
            None => ProviderSection::default(),
        };
        if !(provider.timeout_s.is_finite() && provider.timeout_s > 0.0) {
            return Err(CliError::InvalidConfig(
                "config: provider.timeout_s must be positive".into(),
            ));
        }
        let overrides = WeightsOverrides::<f64>::deserialize(value).map_err(|e| invalid(&e))?;
        let weights = overrides
            .apply(&WeightsConfig::default())
            .map_err(|e| invalid(&e))?;
        Ok(Self { weights, provider })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::read_failure(p, e))?;
                Self::parse(&text)
            }
        }
    }

    pub fn is_remote(&self) -> bool {
        self.provider.mode == ProviderMode::Remote
    }

    /// Providers for one engine; `config` is the run's effective config.
    pub fn providers(&self, config: &WeightsConfig<f64>) -> Result<Providers<f64>, CliError> {
        match self.provider.mode {
            ProviderMode::Mock => Ok(Providers::mock(config)),
            ProviderMode::Remote => {
                let endpoint = std::env::var(ENDPOINT_ENV)
                    .ok()
                    .filter(|e| !e.is_empty())
                    .or_else(|| self.provider.endpoint.clone())
                    .ok_or_else(|| {
                        CliError::InvalidConfig(format!(
                            "remote mode needs provider.endpoint or {ENDPOINT_ENV}"
                        ))
                    })?;
                let timeout = Duration::from_secs_f64(self.provider.timeout_s);
                Ok(Providers::remote(RemoteClient::new(
                    endpoint,
                    timeout,
                    config.embedding_dim,
                )))
            }
        }
    }
}
