//! Constant-reply backend for tests and dry runs.

use async_trait::async_trait;
use trajlab_core::config::MockSpec;
use trajlab_core::judge::{
    Judge, JudgeError, JudgeRequest, QualityLabel, RubricInfo, Verdict,
};

pub struct MockJudge {
    spec: MockSpec,
}

impl MockJudge {
    pub fn new(spec: MockSpec) -> Self {
        MockJudge { spec }
    }
}

#[async_trait]
impl Judge for MockJudge {
    async fn judge_checkpoint(&self, _req: &JudgeRequest) -> Result<Verdict, JudgeError> {
        Ok(self.spec.verdict)
    }

    async fn evaluate_plan(
        &self,
        _query: &str,
        _plan_text: &str,
        n: u32,
    ) -> Result<u32, JudgeError> {
        // The configured constant is clamped so the default of 6 stays a
        // perfect score under any smaller scale.
        Ok(self.spec.plan_score.min(n))
    }

    async fn classify_reflection(&self, _req: &JudgeRequest) -> Result<QualityLabel, JudgeError> {
        Ok(self.spec.label)
    }

    fn rubric(&self) -> RubricInfo {
        RubricInfo {
            name: "mock-constant".into(),
            version: "0".into(),
            experimental: true,
        }
    }
}
