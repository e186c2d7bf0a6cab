//! Sub-rewards and their aggregation.
//!
//! Every formula works on exact rationals; the only rounding anywhere is the
//! caller's final `Score::to_f64`. That makes set-membership claims (tool
//! scores are exactly one of {0, 1/10, 4/5, 1}) testable without tolerances.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::judge::{Judge, JudgeError, JudgeRequest, Verdict};
use crate::schema::TagSchema;
use crate::score::Score;
use crate::trajectory::{OutputManifest, ToolOutcome, Trajectory, TrajectoryError};
use crate::validate::{validate_trajectory, TurnValidation};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Reflection,
    Plan,
    Format,
    Tool,
    Result,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Reflection,
        Dimension::Plan,
        Dimension::Format,
        Dimension::Tool,
        Dimension::Result,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Dimension::Reflection => "reflection",
            Dimension::Plan => "plan",
            Dimension::Format => "format",
            Dimension::Tool => "tool",
            Dimension::Result => "result",
        }
    }
}

impl std::fmt::Display for Dimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Dimension {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .iter()
            .find(|d| d.name() == s)
            .copied()
            .ok_or_else(|| format!("unknown reward dimension {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyToolPolicy {
    /// No calls at all scores 0; visual tasks are expected to use tools.
    #[default]
    Zero,
    /// No calls scores 1 when the task planned none.
    VacuouslyPerfect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Ordered dimension set W.
    pub dimensions: Vec<Dimension>,
    /// Missing entries default to weight 1.
    pub weights: BTreeMap<Dimension, Score>,
    /// N, the plan evaluator's top score.
    pub plan_scale_n: u32,
    /// The divisor in the total is |W|, not the weight sum, so non-unit
    /// weights can push the total outside [0,1]. Such configs are rejected
    /// unless this is set.
    pub allow_unnormalized: bool,
    pub empty_tool_policy: EmptyToolPolicy,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            dimensions: Dimension::ALL.to_vec(),
            weights: BTreeMap::new(),
            plan_scale_n: 6,
            allow_unnormalized: false,
            empty_tool_policy: EmptyToolPolicy::Zero,
        }
    }
}

impl RewardConfig {
    pub fn weight(&self, dim: Dimension) -> Score {
        self.weights.get(&dim).copied().unwrap_or(Score::ONE)
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        if self.dimensions.is_empty() {
            return Err(RewardError::EmptyDimensions);
        }
        let mut seen = BTreeSet::new();
        for dim in &self.dimensions {
            if !seen.insert(dim) {
                return Err(RewardError::DuplicateDimension(*dim));
            }
        }
        if self.plan_scale_n == 0 {
            return Err(RewardError::BadPlanScale);
        }
        for (dim, w) in &self.weights {
            if w.numer() < 0 {
                return Err(RewardError::NegativeWeight(*dim));
            }
            if *w != Score::ONE && !self.allow_unnormalized {
                return Err(RewardError::UnnormalizedWeights(*dim));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointCategory {
    Subject,
    Style,
    Attribute,
    Scene,
    Action,
    Text,
}

/// One judge-verifiable requirement derived from a query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<CheckpointCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeDecision {
    pub checkpoint_id: String,
    pub verdict: Verdict,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RewardError {
    #[error("checkpoint {0:?} has no judge decision")]
    MissingDecision(String),
    #[error("checkpoint {0:?} has more than one judge decision")]
    DuplicateDecision(String),
    #[error("decision references unknown checkpoint {0:?}")]
    UnknownDecision(String),
    #[error("no checkpoints to score against")]
    NoCheckpoints,
    #[error("plan score {score} outside 0..={n}")]
    ScoreOutOfRange { score: u32, n: u32 },
    #[error("dimension {0} requested but not present in the reward vector")]
    MissingDimension(Dimension),
    #[error("dimension set is empty")]
    EmptyDimensions,
    #[error("dimension {0} listed twice")]
    DuplicateDimension(Dimension),
    #[error("weight for {0} is negative")]
    NegativeWeight(Dimension),
    #[error("non-unit weight for {0} without allow_unnormalized")]
    UnnormalizedWeights(Dimension),
    #[error("plan_scale_n must be positive")]
    BadPlanScale,
}

/// Per-dimension sub-rewards plus the aggregated total. `reflection` and
/// `plan` stay `None` when their dimension is not in the active set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reflection: Option<Score>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<Score>,
    pub format: Score,
    pub tool: Score,
    pub result: Score,
    pub total: Score,
}

impl RewardVector {
    pub fn get(&self, dim: Dimension) -> Option<Score> {
        match dim {
            Dimension::Reflection => self.reflection,
            Dimension::Plan => self.plan,
            Dimension::Format => Some(self.format),
            Dimension::Tool => Some(self.tool),
            Dimension::Result => Some(self.result),
        }
    }
}

/// s_t = (n_valid + order) / (n_required + 1).
pub fn turn_format_score(n_valid: usize, n_required: usize, order_ok: bool) -> Score {
    Score::new(
        (n_valid + order_ok as usize) as i128,
        (n_required + 1) as i128,
    )
}

pub fn turn_score(v: &TurnValidation) -> Score {
    turn_format_score(v.n_valid, v.n_required, v.order_ok)
}

/// min_t s_t: one badly formatted turn caps the whole trajectory.
pub fn format_reward(trajectory: &Trajectory, schema: &TagSchema) -> Result<Score, TrajectoryError> {
    Ok(validate_trajectory(trajectory, schema)?.format_score)
}

/// Piecewise tool credit from the full outcome sequence. With α = success of
/// every intermediate call, β = success of the final call, γ = any success:
/// 1 if α∧β, 4/5 if ¬α∧β, 1/10 if ¬β∧γ, else 0.
pub fn tool_reward(outcomes: &[ToolOutcome], empty_policy: EmptyToolPolicy) -> Score {
    let Some(last) = outcomes.last() else {
        return match empty_policy {
            EmptyToolPolicy::Zero => Score::ZERO,
            EmptyToolPolicy::VacuouslyPerfect => Score::ONE,
        };
    };
    let alpha = outcomes[..outcomes.len() - 1].iter().all(|o| o.succeeded());
    let beta = last.succeeded();
    let gamma = outcomes.iter().any(|o| o.succeeded());
    match (alpha, beta, gamma) {
        (true, true, _) => Score::ONE,
        (false, true, _) => Score::new(4, 5),
        (_, false, true) => Score::new(1, 10),
        (_, false, false) => Score::ZERO,
    }
}

/// 1 iff both artifact counts strictly match the task's expectation.
pub fn result_reward(actual: &OutputManifest, expected_images: u32, expected_videos: u32) -> Score {
    if actual.image_count == expected_images && actual.video_count == expected_videos {
        Score::ONE
    } else {
        Score::ZERO
    }
}

/// Satisfied-checkpoint ratio: accepts / K. Decisions must cover the
/// checkpoint set exactly, once each.
pub fn reflect_reward(
    decisions: &[JudgeDecision],
    checkpoints: &[Checkpoint],
) -> Result<Score, RewardError> {
    if checkpoints.is_empty() {
        return Err(RewardError::NoCheckpoints);
    }
    let ids: BTreeSet<&str> = checkpoints.iter().map(|c| c.id.as_str()).collect();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut accepts = 0i128;
    for d in decisions {
        let id = d.checkpoint_id.as_str();
        if !ids.contains(id) {
            return Err(RewardError::UnknownDecision(id.to_string()));
        }
        if !seen.insert(id) {
            return Err(RewardError::DuplicateDecision(id.to_string()));
        }
        if d.verdict.accepted() {
            accepts += 1;
        }
    }
    if let Some(missing) = ids.iter().find(|id| !seen.contains(**id)) {
        return Err(RewardError::MissingDecision(missing.to_string()));
    }
    Ok(Score::new(accepts, checkpoints.len() as i128))
}

/// f_eval / N with f_eval accepted in 0..=N.
pub fn plan_reward(evaluator_score: u32, n: u32) -> Result<Score, RewardError> {
    if n == 0 {
        return Err(RewardError::BadPlanScale);
    }
    if evaluator_score > n {
        return Err(RewardError::ScoreOutOfRange {
            score: evaluator_score,
            n,
        });
    }
    Ok(Score::new(evaluator_score as i128, n as i128))
}

/// (1/|W|) Σ w_i·R_i over the configured dimension set. The divisor is the
/// set size, exactly as the aggregation is defined.
pub fn total_reward(v: &RewardVector, config: &RewardConfig) -> Result<Score, RewardError> {
    config.validate()?;
    let mut acc = Score::ZERO;
    for dim in &config.dimensions {
        let r = v.get(*dim).ok_or(RewardError::MissingDimension(*dim))?;
        acc = acc + config.weight(*dim) * r;
    }
    Ok(acc / Score::from_int(config.dimensions.len() as i128))
}

/// Non-fatal scoring events, reported alongside the vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreDiagnostic {
    /// Plan dimension requested but the first turn has no planning tag.
    PlanTagMissing,
    /// Reflection dimension requested but the trajectory produced no
    /// artifacts for the judge to look at.
    NoArtifacts,
    /// Reflection dimension requested but the task defines no checkpoints.
    NoCheckpoints,
}

impl std::fmt::Display for ScoreDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScoreDiagnostic::PlanTagMissing => write!(f, "no planning tag; plan scored 0"),
            ScoreDiagnostic::NoArtifacts => write!(f, "no artifacts; reflection scored 0"),
            ScoreDiagnostic::NoCheckpoints => write!(f, "no checkpoints; reflection scored 0"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoredTrajectory {
    pub trajectory_id: String,
    pub rewards: RewardVector,
    pub diagnostics: Vec<ScoreDiagnostic>,
}

/// The scoring task description the engine needs: the query, its
/// checkpoints, and the expected artifact counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringTask {
    pub query: String,
    pub checkpoints: Vec<Checkpoint>,
    pub expected_images: u32,
    pub expected_videos: u32,
}

pub struct Scorer {
    pub schema: TagSchema,
    pub config: RewardConfig,
}

impl Scorer {
    pub fn new(schema: TagSchema, config: RewardConfig) -> Self {
        Scorer { schema, config }
    }

    /// Fills every dimension in the active set. Judge calls happen only for
    /// requested dimensions; malformed-but-scoreable situations (missing
    /// plan tag, nothing to judge) degrade to a 0 with a diagnostic so RL
    /// scoring stays total.
    pub async fn score_trajectory(
        &self,
        trajectory: &Trajectory,
        task: &ScoringTask,
        judge: &dyn Judge,
    ) -> Result<ScoredTrajectory, ScoreError> {
        self.config.validate()?;
        let mut diagnostics = Vec::new();

        let format = format_reward(trajectory, &self.schema)?;
        let tool = tool_reward(
            &trajectory.tool_outcomes(),
            self.config.empty_tool_policy,
        );
        let result = result_reward(
            &trajectory.outputs,
            task.expected_images,
            task.expected_videos,
        );

        let reflection = if self.config.dimensions.contains(&Dimension::Reflection) {
            Some(
                self.reflection_score(trajectory, task, judge, &mut diagnostics)
                    .await?,
            )
        } else {
            None
        };

        let plan = if self.config.dimensions.contains(&Dimension::Plan) {
            Some(match trajectory.plan_text() {
                Some(text) if !text.trim().is_empty() => {
                    let n = self.config.plan_scale_n;
                    let f = judge.evaluate_plan(&task.query, text, n).await?;
                    plan_reward(f, n)?
                }
                _ => {
                    diagnostics.push(ScoreDiagnostic::PlanTagMissing);
                    Score::ZERO
                }
            })
        } else {
            None
        };

        let mut rewards = RewardVector {
            reflection,
            plan,
            format,
            tool,
            result,
            total: Score::ZERO,
        };
        rewards.total = total_reward(&rewards, &self.config)?;
        Ok(ScoredTrajectory {
            trajectory_id: trajectory.id.clone(),
            rewards,
            diagnostics,
        })
    }

    async fn reflection_score(
        &self,
        trajectory: &Trajectory,
        task: &ScoringTask,
        judge: &dyn Judge,
        diagnostics: &mut Vec<ScoreDiagnostic>,
    ) -> Result<Score, ScoreError> {
        if task.checkpoints.is_empty() {
            diagnostics.push(ScoreDiagnostic::NoCheckpoints);
            return Ok(Score::ZERO);
        }
        if trajectory.outputs.artifact_ids.is_empty() {
            diagnostics.push(ScoreDiagnostic::NoArtifacts);
            return Ok(Score::ZERO);
        }
        let mut decisions = Vec::with_capacity(task.checkpoints.len());
        for cp in &task.checkpoints {
            let req = JudgeRequest::checkpoint(
                task.query.clone(),
                cp.id.clone(),
                cp.description.clone(),
                trajectory.outputs.artifact_ids.clone(),
            );
            let verdict = judge.judge_checkpoint(&req).await?;
            decisions.push(JudgeDecision {
                checkpoint_id: cp.id.clone(),
                verdict,
            });
        }
        Ok(reflect_reward(&decisions, &task.checkpoints)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testsupport::ProgrammedJudge;

    fn s(success: bool) -> ToolOutcome {
        if success {
            ToolOutcome::success()
        } else {
            ToolOutcome::failure("x")
        }
    }

    fn seq(bits: &[bool]) -> Vec<ToolOutcome> {
        bits.iter().map(|&b| s(b)).collect()
    }

    #[test]
    fn tool_reward_matches_the_piecewise_table() {
        let p = EmptyToolPolicy::Zero;
        assert_eq!(tool_reward(&seq(&[true, true, true]), p), Score::ONE);
        assert_eq!(tool_reward(&seq(&[false, true]), p), Score::new(4, 5));
        assert_eq!(tool_reward(&seq(&[true, false]), p), Score::new(1, 10));
        assert_eq!(tool_reward(&seq(&[false, false]), p), Score::ZERO);
        // single call: the intermediate product is empty, hence 1
        assert_eq!(tool_reward(&seq(&[true]), p), Score::ONE);
        assert_eq!(tool_reward(&seq(&[false]), p), Score::ZERO);
    }

    #[test]
    fn empty_tool_sequence_follows_policy() {
        assert_eq!(tool_reward(&[], EmptyToolPolicy::Zero), Score::ZERO);
        assert_eq!(
            tool_reward(&[], EmptyToolPolicy::VacuouslyPerfect),
            Score::ONE
        );
    }

    #[test]
    fn tool_reward_range_is_exactly_four_values() {
        // exhaustive over all sequences up to length 6
        let allowed = [Score::ZERO, Score::new(1, 10), Score::new(4, 5), Score::ONE];
        for len in 1..=6usize {
            for mask in 0u32..(1 << len) {
                let bits: Vec<bool> = (0..len).map(|i| mask & (1 << i) != 0).collect();
                let r = tool_reward(&seq(&bits), EmptyToolPolicy::Zero);
                assert!(allowed.contains(&r), "{bits:?} -> {r}");
            }
        }
    }

    #[test]
    fn tool_reward_depends_only_on_alpha_beta_gamma() {
        // permuting intermediate outcomes preserves (α, β, γ) and the score
        for len in 2..=5usize {
            for mask in 0u32..(1 << len) {
                let bits: Vec<bool> = (0..len).map(|i| mask & (1 << i) != 0).collect();
                let base = tool_reward(&seq(&bits), EmptyToolPolicy::Zero);
                let mut permuted = bits.clone();
                permuted[..len - 1].reverse();
                assert_eq!(
                    tool_reward(&seq(&permuted), EmptyToolPolicy::Zero),
                    base,
                    "{bits:?} vs {permuted:?}"
                );
            }
        }
    }

    #[test]
    fn result_reward_is_strict_count_match() {
        let m = |i, v| OutputManifest {
            image_count: i,
            video_count: v,
            artifact_ids: vec![],
        };
        assert_eq!(result_reward(&m(3, 0), 3, 0), Score::ONE);
        assert_eq!(result_reward(&m(2, 0), 3, 0), Score::ZERO);
        assert_eq!(result_reward(&m(0, 0), 0, 0), Score::ONE);
        assert_eq!(result_reward(&m(1, 1), 1, 0), Score::ZERO);
    }

    fn checkpoints(n: usize) -> Vec<Checkpoint> {
        (0..n)
            .map(|i| Checkpoint {
                id: format!("cp{i}"),
                description: format!("requirement {i}"),
                category: None,
            })
            .collect()
    }

    fn decisions(verdicts: &[Verdict]) -> Vec<JudgeDecision> {
        verdicts
            .iter()
            .enumerate()
            .map(|(i, v)| JudgeDecision {
                checkpoint_id: format!("cp{i}"),
                verdict: *v,
            })
            .collect()
    }

    #[test]
    fn reflect_reward_is_the_accept_ratio() {
        use Verdict::*;
        let cps = checkpoints(6);
        let r = reflect_reward(
            &decisions(&[Accept, Accept, Accept, Accept, Refuse, Refuse]),
            &cps,
        )
        .unwrap();
        assert_eq!(r, Score::new(2, 3));
        assert_eq!(
            reflect_reward(&decisions(&[Accept]), &checkpoints(1)).unwrap(),
            Score::ONE
        );
        assert_eq!(
            reflect_reward(&decisions(&[Refuse; 5]), &checkpoints(5)).unwrap(),
            Score::ZERO
        );
    }

    #[test]
    fn reflect_reward_times_k_is_the_accept_count() {
        use Verdict::*;
        for k in 1..=8usize {
            for mask in 0u32..(1 << k) {
                let vs: Vec<Verdict> = (0..k)
                    .map(|i| if mask & (1 << i) != 0 { Accept } else { Refuse })
                    .collect();
                let r = reflect_reward(&decisions(&vs), &checkpoints(k)).unwrap();
                let scaled = r * Score::from_int(k as i128);
                assert_eq!(scaled.denom(), 1);
                assert_eq!(scaled.numer(), mask.count_ones() as i128);
            }
        }
    }

    #[test]
    fn flipping_a_refuse_adds_exactly_one_kth() {
        use Verdict::*;
        let cps = checkpoints(4);
        let mut vs = vec![Accept, Refuse, Refuse, Accept];
        let before = reflect_reward(&decisions(&vs), &cps).unwrap();
        vs[1] = Accept;
        let after = reflect_reward(&decisions(&vs), &cps).unwrap();
        assert_eq!(after - before, Score::new(1, 4));
    }

    #[test]
    fn reflect_reward_rejects_bad_coverage() {
        use Verdict::*;
        let cps = checkpoints(2);
        assert_eq!(
            reflect_reward(&decisions(&[Accept]), &cps),
            Err(RewardError::MissingDecision("cp1".into()))
        );
        let mut dup = decisions(&[Accept, Accept]);
        dup[1].checkpoint_id = "cp0".into();
        assert_eq!(
            reflect_reward(&dup, &cps),
            Err(RewardError::DuplicateDecision("cp0".into()))
        );
        let mut unknown = decisions(&[Accept, Accept]);
        unknown[1].checkpoint_id = "cp9".into();
        assert_eq!(
            reflect_reward(&unknown, &cps),
            Err(RewardError::UnknownDecision("cp9".into()))
        );
        assert_eq!(reflect_reward(&[], &[]), Err(RewardError::NoCheckpoints));
    }

    #[test]
    fn plan_reward_divides_by_n() {
        assert_eq!(plan_reward(6, 6).unwrap(), Score::ONE);
        assert_eq!(plan_reward(3, 6).unwrap(), Score::new(1, 2));
        assert_eq!(plan_reward(0, 6).unwrap(), Score::ZERO);
        assert_eq!(
            plan_reward(7, 6),
            Err(RewardError::ScoreOutOfRange { score: 7, n: 6 })
        );
    }

    #[test]
    fn turn_format_score_formula() {
        assert_eq!(turn_format_score(5, 5, true), Score::ONE);
        assert_eq!(turn_format_score(4, 5, false), Score::new(4, 6));
        assert_eq!(turn_format_score(0, 4, false), Score::ZERO);
    }

    fn vector(
        reflection: Option<Score>,
        plan: Option<Score>,
        format: Score,
        tool: Score,
        result: Score,
    ) -> RewardVector {
        RewardVector {
            reflection,
            plan,
            format,
            tool,
            result,
            total: Score::ZERO,
        }
    }

    #[test]
    fn total_reward_worked_examples_are_exact() {
        let mut config = RewardConfig {
            dimensions: vec![
                Dimension::Reflection,
                Dimension::Format,
                Dimension::Tool,
                Dimension::Result,
            ],
            ..RewardConfig::default()
        };
        let v = vector(
            Some(Score::new(1, 2)),
            None,
            Score::ONE,
            Score::new(4, 5),
            Score::ONE,
        );
        // (0.5 + 1 + 0.8 + 1) / 4 = 33/40 = 0.825, exactly
        assert_eq!(total_reward(&v, &config).unwrap(), Score::new(33, 40));

        config.dimensions = Dimension::ALL.to_vec();
        let v = vector(
            Some(Score::new(1, 2)),
            Some(Score::ONE),
            Score::ONE,
            Score::new(4, 5),
            Score::ONE,
        );
        // (0.5 + 1 + 1 + 0.8 + 1) / 5 = 43/50 = 0.86, exactly
        assert_eq!(total_reward(&v, &config).unwrap(), Score::new(43, 50));
    }

    #[test]
    fn unit_weight_total_is_the_mean_and_permutation_invariant() {
        let v = vector(
            Some(Score::new(3, 4)),
            Some(Score::new(1, 3)),
            Score::new(5, 6),
            Score::new(1, 10),
            Score::ONE,
        );
        let mut config = RewardConfig::default();
        let base = total_reward(&v, &config).unwrap();
        let mean = Dimension::ALL
            .iter()
            .map(|d| v.get(*d).unwrap())
            .sum::<Score>()
            / Score::from_int(5);
        assert_eq!(base, mean);

        config.dimensions.reverse();
        assert_eq!(total_reward(&v, &config).unwrap(), base);
        config.dimensions.swap(1, 3);
        assert_eq!(total_reward(&v, &config).unwrap(), base);
    }

    #[test]
    fn non_unit_weights_need_the_escape_hatch() {
        let v = vector(None, None, Score::ONE, Score::ONE, Score::ONE);
        let mut config = RewardConfig {
            dimensions: vec![Dimension::Format, Dimension::Tool, Dimension::Result],
            ..RewardConfig::default()
        };
        config.weights.insert(Dimension::Tool, Score::new(2, 1));
        assert_eq!(
            total_reward(&v, &config),
            Err(RewardError::UnnormalizedWeights(Dimension::Tool))
        );
        config.allow_unnormalized = true;
        // (1 + 2 + 1) / 3
        assert_eq!(total_reward(&v, &config).unwrap(), Score::new(4, 3));
    }

    #[test]
    fn missing_dimension_is_an_error() {
        let v = vector(None, None, Score::ONE, Score::ONE, Score::ONE);
        let config = RewardConfig::default();
        assert_eq!(
            total_reward(&v, &config),
            Err(RewardError::MissingDimension(Dimension::Reflection))
        );
    }

    mod scoring {
        use super::*;
        use crate::schema::{classify_turn, TagKind};
        use crate::trajectory::{TagInstance, ToolInvocation, Turn};
        use futures::executor::block_on;

        fn conforming_trajectory() -> Trajectory {
            let call = |name: &str| TagInstance::new(
                TagKind::ToolCall,
                format!("{{\"tool\":\"{name}\"}}"),
            );
            let result_tag = TagInstance::new(TagKind::ToolResult, "{\"status\":\"success\"}");
            let invocation = |name: &str| ToolInvocation {
                tool_name: name.into(),
                arguments: serde_json::Value::Null,
                outcome: ToolOutcome::success(),
            };
            let first = Turn {
                index: 1,
                kind: classify_turn(1, 2),
                tags: vec![
                    TagInstance::new(TagKind::Thinking, "look at the query"),
                    TagInstance::new(TagKind::Planning, "render, then refine"),
                    TagInstance::new(TagKind::Thinking, "start"),
                    call("image_gen"),
                    result_tag.clone(),
                ],
                tool_invocations: vec![invocation("image_gen")],
            };
            let last = Turn {
                index: 2,
                kind: classify_turn(2, 2),
                tags: vec![
                    TagInstance::new(TagKind::Reflection, "output matches"),
                    TagInstance::new(TagKind::Thinking, "finish"),
                    TagInstance::new(TagKind::FinalAnswer, "here are the images"),
                ],
                tool_invocations: vec![],
            };
            Trajectory {
                id: "t1".into(),
                query_id: "q1".into(),
                turns: vec![first, last],
                outputs: OutputManifest {
                    image_count: 3,
                    video_count: 0,
                    artifact_ids: vec!["img_0".into(), "img_1".into(), "img_2".into()],
                },
                raw_text: None,
            }
        }

        fn task(n_checkpoints: usize) -> ScoringTask {
            ScoringTask {
                query: "three herons".into(),
                checkpoints: checkpoints(n_checkpoints),
                expected_images: 3,
                expected_videos: 0,
            }
        }

        fn scorer(dims: Vec<Dimension>) -> Scorer {
            Scorer::new(
                TagSchema::default(),
                RewardConfig {
                    dimensions: dims,
                    ..RewardConfig::default()
                },
            )
        }

        #[test]
        fn all_perfect_composition() {
            let scorer = scorer(vec![
                Dimension::Reflection,
                Dimension::Format,
                Dimension::Tool,
                Dimension::Result,
            ]);
            let judge = ProgrammedJudge::default();
            let scored = block_on(scorer.score_trajectory(
                &conforming_trajectory(),
                &task(4),
                &judge,
            ))
            .unwrap();
            assert_eq!(scored.rewards.reflection, Some(Score::ONE));
            assert_eq!(scored.rewards.format, Score::ONE);
            assert_eq!(scored.rewards.tool, Score::ONE);
            assert_eq!(scored.rewards.result, Score::ONE);
            assert_eq!(scored.rewards.total, Score::ONE);
            assert!(scored.diagnostics.is_empty());
        }

        #[test]
        fn one_refused_checkpoint_composition() {
            let scorer = scorer(vec![
                Dimension::Reflection,
                Dimension::Format,
                Dimension::Tool,
                Dimension::Result,
            ]);
            let mut judge = ProgrammedJudge::default();
            judge.refuse_checkpoints.insert("cp2".into());
            let scored = block_on(scorer.score_trajectory(
                &conforming_trajectory(),
                &task(4),
                &judge,
            ))
            .unwrap();
            assert_eq!(scored.rewards.reflection, Some(Score::new(3, 4)));
            // (3/4 + 1 + 1 + 1) / 4 = 15/16 = 0.9375
            assert_eq!(scored.rewards.total, Score::new(15, 16));
        }

        #[test]
        fn missing_plan_tag_scores_zero_with_a_diagnostic() {
            let scorer = scorer(Dimension::ALL.to_vec());
            let judge = ProgrammedJudge::default();
            let mut t = conforming_trajectory();
            t.turns[0].tags.retain(|tag| tag.kind != TagKind::Planning);
            let scored =
                block_on(scorer.score_trajectory(&t, &task(4), &judge)).unwrap();
            assert_eq!(scored.rewards.plan, Some(Score::ZERO));
            assert!(scored
                .diagnostics
                .contains(&ScoreDiagnostic::PlanTagMissing));
            // format drops because the first turn lost a slot
            assert!(scored.rewards.format < Score::ONE);
        }

        #[test]
        fn no_artifacts_short_circuits_reflection() {
            let scorer = scorer(vec![Dimension::Reflection, Dimension::Format]);
            let judge = ProgrammedJudge::default();
            let mut t = conforming_trajectory();
            t.outputs.artifact_ids.clear();
            let scored =
                block_on(scorer.score_trajectory(&t, &task(4), &judge)).unwrap();
            assert_eq!(scored.rewards.reflection, Some(Score::ZERO));
            assert!(scored.diagnostics.contains(&ScoreDiagnostic::NoArtifacts));
        }

        #[test]
        fn plan_uses_the_configured_scale() {
            let mut scorer = scorer(vec![Dimension::Plan, Dimension::Format]);
            scorer.config.plan_scale_n = 6;
            let judge = ProgrammedJudge {
                plan_score: 4,
                ..ProgrammedJudge::default()
            };
            let scored = block_on(scorer.score_trajectory(
                &conforming_trajectory(),
                &task(0),
                &judge,
            ))
            .unwrap();
            assert_eq!(scored.rewards.plan, Some(Score::new(2, 3)));
        }
    }
}
