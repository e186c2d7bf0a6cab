//! The judge abstraction: checkpoint verdicts, plan evaluation, and
//! reflection-quality labels, behind one async trait so scoring code is
//! agnostic to whether the evaluator is mocked, replayed, or remote.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Refuse,
}

impl Verdict {
    pub fn accepted(self) -> bool {
        self == Verdict::Accept
    }
}

/// Reflection quality: Under = a needed correction was not identified,
/// Over = an unneeded correction was demanded, Good = neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityLabel {
    Under,
    Good,
    Over,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeRequestKind {
    CheckpointVerdict,
    PlanEvaluation,
    ReflectionQuality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub kind: JudgeRequestKind,
    /// The originating user query, for context.
    pub query: String,
    /// Checkpoint description, plan text, or reflection segment,
    /// depending on `kind`.
    pub payload: String,
    /// Opaque references to the images/videos under evaluation.
    #[serde(default)]
    pub artifact_refs: Vec<String>,
    /// Set for checkpoint requests; scripted backends key replays on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_id: Option<String>,
}

impl JudgeRequest {
    pub fn checkpoint(
        query: impl Into<String>,
        checkpoint_id: impl Into<String>,
        description: impl Into<String>,
        artifact_refs: Vec<String>,
    ) -> Self {
        JudgeRequest {
            kind: JudgeRequestKind::CheckpointVerdict,
            query: query.into(),
            payload: description.into(),
            artifact_refs,
            checkpoint_id: Some(checkpoint_id.into()),
        }
    }

    pub fn reflection(query: impl Into<String>, segment: impl Into<String>) -> Self {
        JudgeRequest {
            kind: JudgeRequestKind::ReflectionQuality,
            query: query.into(),
            payload: segment.into(),
            artifact_refs: Vec::new(),
            checkpoint_id: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("judge unavailable after {attempts} attempts: {message}")]
    JudgeUnavailable { attempts: u32, message: String },
    #[error("malformed judge reply: {message}; raw: {raw:?}")]
    MalformedReply { message: String, raw: String },
    #[error("no scripted reply for key {key:?}")]
    MissingScript { key: String },
    #[error("invalid judge request: {0}")]
    InvalidRequest(String),
}

/// Provenance of the reflection-quality rubric a backend applies. The
/// under/good/over classification has no externally fixed procedure, so
/// every derived statistic carries this tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricInfo {
    pub name: String,
    pub version: String,
    pub experimental: bool,
}

#[async_trait::async_trait]
pub trait Judge: Send + Sync {
    /// Binary verdict: do the referenced artifacts satisfy the checkpoint?
    async fn judge_checkpoint(&self, req: &JudgeRequest) -> Result<Verdict, JudgeError>;

    /// Integer plan score in `0..=n` against the three plan criteria.
    async fn evaluate_plan(
        &self,
        query: &str,
        plan_text: &str,
        n: u32,
    ) -> Result<u32, JudgeError>;

    /// One quality label per reflection instance.
    async fn classify_reflection(&self, req: &JudgeRequest) -> Result<QualityLabel, JudgeError>;

    fn rubric(&self) -> RubricInfo;
}
