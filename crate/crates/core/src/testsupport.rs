//! Programmable judge for unit tests.

use std::collections::{BTreeMap, BTreeSet};

use crate::judge::{Judge, JudgeError, JudgeRequest, QualityLabel, RubricInfo, Verdict};

pub struct ProgrammedJudge {
    pub default_verdict: Verdict,
    /// Checkpoint ids that get Refuse regardless of the default.
    pub refuse_checkpoints: BTreeSet<String>,
    pub plan_score: u32,
    /// Reflection labels keyed by payload text.
    pub labels: BTreeMap<String, QualityLabel>,
    pub default_label: QualityLabel,
}

impl Default for ProgrammedJudge {
    fn default() -> Self {
        ProgrammedJudge {
            default_verdict: Verdict::Accept,
            refuse_checkpoints: BTreeSet::new(),
            plan_score: 6,
            labels: BTreeMap::new(),
            default_label: QualityLabel::Good,
        }
    }
}

#[async_trait::async_trait]
impl Judge for ProgrammedJudge {
    async fn judge_checkpoint(&self, req: &JudgeRequest) -> Result<Verdict, JudgeError> {
        let id = req
            .checkpoint_id
            .as_deref()
            .ok_or_else(|| JudgeError::InvalidRequest("no checkpoint id".into()))?;
        if self.refuse_checkpoints.contains(id) {
            Ok(Verdict::Refuse)
        } else {
            Ok(self.default_verdict)
        }
    }

    async fn evaluate_plan(&self, _q: &str, _p: &str, n: u32) -> Result<u32, JudgeError> {
        Ok(self.plan_score.min(n))
    }

    async fn classify_reflection(&self, req: &JudgeRequest) -> Result<QualityLabel, JudgeError> {
        Ok(self
            .labels
            .get(&req.payload)
            .copied()
            .unwrap_or(self.default_label))
    }

    fn rubric(&self) -> RubricInfo {
        RubricInfo {
            name: "programmed-test-judge".into(),
            version: "0".into(),
            experimental: true,
        }
    }
}
