//! Replay backend. A JSON script records one reply per key, keyed the way
//! the scoring engine asks: checkpoints by (query, checkpoint_id), plans
//! by query, reflections by (query, assembled segment). A missing key is
//! an error, never a guess; the script IS the cache.

use std::collections::BTreeMap;
use std::path::Path;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use trajlab_core::judge::{
    Judge, JudgeError, JudgeRequest, QualityLabel, RubricInfo, Verdict,
};

use crate::BuildError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScriptFile {
    pub checkpoints: Vec<CheckpointEntry>,
    pub plans: Vec<PlanEntry>,
    pub reflections: Vec<ReflectionEntry>,
    /// Provenance of whatever judge produced the recording. Defaults to a
    /// generic scripted tag when the recorder did not say.
    pub rubric: Option<RubricInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointEntry {
    pub query: String,
    pub checkpoint_id: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub query: String,
    pub score: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectionEntry {
    pub query: String,
    /// The exact segment text the analysis code assembles for this
    /// reflection instance.
    pub payload: String,
    pub label: QualityLabel,
}

pub struct ScriptedJudge {
    checkpoints: BTreeMap<(String, String), Verdict>,
    plans: BTreeMap<String, u32>,
    reflections: BTreeMap<(String, String), QualityLabel>,
    rubric: RubricInfo,
}

impl ScriptedJudge {
    pub fn from_script(script: ScriptFile) -> Result<Self, BuildError> {
        let mut checkpoints = BTreeMap::new();
        for e in script.checkpoints {
            let key = (e.query, e.checkpoint_id);
            if checkpoints.insert(key.clone(), e.verdict).is_some() {
                return Err(BuildError::DuplicateKey(format!(
                    "checkpoint ({}, {})",
                    key.0, key.1
                )));
            }
        }
        let mut plans = BTreeMap::new();
        for e in script.plans {
            if plans.insert(e.query.clone(), e.score).is_some() {
                return Err(BuildError::DuplicateKey(format!("plan ({})", e.query)));
            }
        }
        let mut reflections = BTreeMap::new();
        for e in script.reflections {
            let key = (e.query, e.payload);
            if reflections.insert(key.clone(), e.label).is_some() {
                return Err(BuildError::DuplicateKey(format!(
                    "reflection ({}, {:?})",
                    key.0, key.1
                )));
            }
        }
        Ok(ScriptedJudge {
            checkpoints,
            plans,
            reflections,
            rubric: script.rubric.unwrap_or(RubricInfo {
                name: "scripted".into(),
                version: "0".into(),
                experimental: true,
            }),
        })
    }

    pub fn load(path: &Path) -> Result<Self, BuildError> {
        let text = std::fs::read_to_string(path).map_err(|e| BuildError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let script: ScriptFile =
            serde_json::from_str(&text).map_err(|e| BuildError::Script {
                path: path.display().to_string(),
                source: e,
            })?;
        Self::from_script(script)
    }
}

#[async_trait]
impl Judge for ScriptedJudge {
    async fn judge_checkpoint(&self, req: &JudgeRequest) -> Result<Verdict, JudgeError> {
        let id = req.checkpoint_id.as_ref().ok_or_else(|| {
            JudgeError::InvalidRequest("checkpoint request without checkpoint_id".into())
        })?;
        let key = (req.query.clone(), id.clone());
        self.checkpoints
            .get(&key)
            .copied()
            .ok_or_else(|| JudgeError::MissingScript {
                key: format!("checkpoint ({}, {})", key.0, key.1),
            })
    }

    async fn evaluate_plan(
        &self,
        query: &str,
        _plan_text: &str,
        n: u32,
    ) -> Result<u32, JudgeError> {
        let score = *self
            .plans
            .get(query)
            .ok_or_else(|| JudgeError::MissingScript {
                key: format!("plan ({query})"),
            })?;
        if score > n {
            return Err(JudgeError::MalformedReply {
                message: format!("scripted score {score} out of range 0..={n}"),
                raw: score.to_string(),
            });
        }
        Ok(score)
    }

    async fn classify_reflection(&self, req: &JudgeRequest) -> Result<QualityLabel, JudgeError> {
        let key = (req.query.clone(), req.payload.clone());
        self.reflections
            .get(&key)
            .copied()
            .ok_or_else(|| JudgeError::MissingScript {
                key: format!("reflection ({}, {:?})", key.0, key.1),
            })
    }

    fn rubric(&self) -> RubricInfo {
        self.rubric.clone()
    }
}
