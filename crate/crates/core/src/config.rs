//! One TOML file configures everything: tag schema, reward dimensions,
//! filter requirements, judge backend, and analysis concurrency. Every
//! section is optional and defaults to the canonical setup; `validate`
//! must pass before any work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::FilterSpec;
use crate::judge::{QualityLabel, Verdict};
use crate::reward::{RewardConfig, RewardError};
use crate::schema::{SchemaError, TagSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeBackendKind {
    #[default]
    Mock,
    Scripted,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsePolicy {
    /// Malformed judge replies are errors.
    #[default]
    Strict,
    /// Malformed checkpoint replies count as Refuse; other request kinds
    /// still error. Keeps RL scoring total without inventing plan scores.
    RefuseOnMalformed,
}

/// Constant replies for the mock backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockSpec {
    pub verdict: Verdict,
    pub plan_score: u32,
    pub label: QualityLabel,
}

impl Default for MockSpec {
    fn default() -> Self {
        MockSpec {
            verdict: Verdict::Accept,
            plan_score: 6,
            label: QualityLabel::Good,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeSpec {
    pub backend: JudgeBackendKind,
    /// Remote only: base URL of the chat endpoint.
    pub endpoint: Option<String>,
    pub model_name: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub parse_policy: ParsePolicy,
    /// Scripted only: replay file.
    pub script_path: Option<PathBuf>,
    pub mock: MockSpec,
    /// Name of the environment variable holding the bearer token, if the
    /// remote endpoint wants one. The token itself never appears in config.
    pub token_env: Option<String>,
    /// Max concurrent judge requests.
    pub in_flight: usize,
}

impl Default for JudgeSpec {
    fn default() -> Self {
        JudgeSpec {
            backend: JudgeBackendKind::Mock,
            endpoint: None,
            model_name: None,
            timeout_ms: 30_000,
            max_retries: 2,
            parse_policy: ParsePolicy::Strict,
            script_path: None,
            mock: MockSpec::default(),
            token_env: None,
            in_flight: 4,
        }
    }
}

impl JudgeSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.backend {
            JudgeBackendKind::Remote if self.endpoint.is_none() => Err(ConfigError::Invalid(
                "remote judge backend requires an endpoint".into(),
            )),
            JudgeBackendKind::Scripted if self.script_path.is_none() => Err(
                ConfigError::Invalid("scripted judge backend requires a script_path".into()),
            ),
            _ => {
                if self.in_flight == 0 {
                    return Err(ConfigError::Invalid("in_flight must be at least 1".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub schema: TagSchema,
    pub reward: RewardConfig,
    pub filter: FilterSpec,
    pub judge: JudgeSpec,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

impl AppConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.schema.validate()?;
        self.reward.validate()?;
        self.judge.validate()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let config: AppConfig = toml::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}
