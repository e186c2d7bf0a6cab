//! HTTP backend. One POST per judge call; the reply's `content` text goes
//! through the wire-module parsers.
//!
//! Retry scope: transport failures, body-read failures, and non-2xx
//! statuses. A 2xx reply that fails to decode or parse is a malformed
//! reply, not an availability problem, and is never retried. Retries are
//! back-to-back; pacing belongs to the gateway and attempts are bounded.

use std::time::Duration;

use async_trait::async_trait;
use trajlab_core::config::{JudgeSpec, ParsePolicy};
use trajlab_core::judge::{
    Judge, JudgeError, JudgeRequest, QualityLabel, RubricInfo, Verdict,
};

use crate::wire::{self, WireReply, WireRequest};
use crate::{prompts, BuildError};

pub struct RemoteJudge {
    client: reqwest::Client,
    endpoint: String,
    model: String,
    parse_policy: ParsePolicy,
    max_retries: u32,
    bearer: Option<String>,
}

impl RemoteJudge {
    /// Reads the bearer token out of the environment variable named by
    /// `token_env` at construction, so the secret never sits in config.
    pub fn new(spec: &JudgeSpec) -> Result<Self, BuildError> {
        let endpoint = spec
            .endpoint
            .clone()
            .ok_or_else(|| BuildError::Spec("remote backend requires an endpoint".into()))?;
        let bearer = match &spec.token_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| BuildError::MissingToken { var: var.clone() })?,
            ),
            None => None,
        };
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(spec.timeout_ms))
            .build()
            .map_err(|e| BuildError::Client(e.to_string()))?;
        Ok(RemoteJudge {
            client,
            endpoint,
            model: spec.model_name.clone().unwrap_or_else(|| "judge".into()),
            parse_policy: spec.parse_policy,
            max_retries: spec.max_retries,
            bearer,
        })
    }

    async fn call(&self, prompt: String, artifact_refs: &[String]) -> Result<String, JudgeError> {
        let request = WireRequest::single_turn(&self.model, prompt, artifact_refs);
        let attempts = self.max_retries + 1;
        let mut last = String::new();
        for _ in 0..attempts {
            let mut builder = self.client.post(&self.endpoint).json(&request);
            if let Some(token) = &self.bearer {
                builder = builder.bearer_auth(token);
            }
            match builder.send().await {
                Ok(resp) if resp.status().is_success() => match resp.text().await {
                    Ok(raw) => {
                        return match serde_json::from_str::<WireReply>(&raw) {
                            Ok(reply) => Ok(reply.content),
                            Err(e) => Err(JudgeError::MalformedReply {
                                message: format!("undecodable reply body: {e}"),
                                raw,
                            }),
                        };
                    }
                    Err(e) => last = format!("body read failed: {e}"),
                },
                Ok(resp) => last = format!("http status {}", resp.status()),
                Err(e) => last = e.to_string(),
            }
        }
        Err(JudgeError::JudgeUnavailable {
            attempts,
            message: last,
        })
    }
}

#[async_trait]
impl Judge for RemoteJudge {
    async fn judge_checkpoint(&self, req: &JudgeRequest) -> Result<Verdict, JudgeError> {
        if req.payload.trim().is_empty() {
            return Err(JudgeError::InvalidRequest(
                "checkpoint request with empty description".into(),
            ));
        }
        if req.artifact_refs.is_empty() {
            return Err(JudgeError::InvalidRequest(
                "checkpoint request needs at least one artifact_ref".into(),
            ));
        }
        let prompt = prompts::checkpoint_prompt(&req.query, &req.payload);
        let reply = self.call(prompt, &req.artifact_refs).await?;
        match wire::parse_verdict(&reply) {
            Ok(verdict) => Ok(verdict),
            // Only checkpoint verdicts degrade under RefuseOnMalformed;
            // a made-up plan score or quality label would be data, a
            // refused checkpoint is just a zero.
            Err(err) => match self.parse_policy {
                ParsePolicy::Strict => Err(err),
                ParsePolicy::RefuseOnMalformed => {
                    log::warn!("malformed checkpoint reply counted as refuse: {err}");
                    Ok(Verdict::Refuse)
                }
            },
        }
    }

    async fn evaluate_plan(
        &self,
        query: &str,
        plan_text: &str,
        n: u32,
    ) -> Result<u32, JudgeError> {
        if plan_text.trim().is_empty() {
            return Err(JudgeError::InvalidRequest(
                "plan evaluation with empty plan text".into(),
            ));
        }
        // Text only: intermediate artifacts are not sent to the plan
        // evaluator.
        let prompt = prompts::plan_prompt(query, plan_text, n);
        let reply = self.call(prompt, &[]).await?;
        wire::parse_plan_score(&reply, n)
    }

    async fn classify_reflection(&self, req: &JudgeRequest) -> Result<QualityLabel, JudgeError> {
        if req.payload.trim().is_empty() {
            return Err(JudgeError::InvalidRequest(
                "reflection request with empty segment".into(),
            ));
        }
        let prompt = prompts::reflection_prompt(&req.query, &req.payload);
        let reply = self.call(prompt, &req.artifact_refs).await?;
        wire::parse_quality_label(&reply)
    }

    fn rubric(&self) -> RubricInfo {
        prompts::rubric_info()
    }
}
