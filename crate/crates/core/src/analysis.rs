//! Aggregate statistics over scored runs: benchmark-style per-query scores,
//! mean plan score, and the reflection-quality histogram. Judge calls are
//! issued with bounded concurrency; accumulation is keyed, so results do not
//! depend on response arrival order.

use std::collections::BTreeMap;
use std::path::Path;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::dataset::{TaskRecord, TaskType, TrajectoryRecord};
use crate::judge::{Judge, JudgeError, JudgeRequest, QualityLabel, RubricInfo};
use crate::reward::{reflect_reward, Dimension, JudgeDecision, RewardError};
use crate::schema::TagKind;
use crate::score::Score;
use crate::trajectory::Trajectory;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("trajectory {trajectory_id:?} references unknown query {query_id:?}")]
    UnmatchedTrajectory {
        trajectory_id: String,
        query_id: String,
    },
    #[error("more than one trajectory for query {query_id:?}")]
    DuplicateTrajectory { query_id: String },
    #[error("task {query_id:?} has no checkpoints to bench against")]
    EmptyCheckpoints { query_id: String },
    #[error("no reflection tags in the input")]
    NoReflections,
    #[error("trajectory {trajectory_id:?} lacks dimension {dimension}")]
    MissingDimension {
        trajectory_id: String,
        dimension: Dimension,
    },
    #[error("empty input; the aggregate is undefined")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerQueryScore {
    pub task_type: TaskType,
    pub score: Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Mean satisfied-checkpoint fraction per task type. Types with no
    /// queries are absent, not zero.
    pub per_task_type: BTreeMap<TaskType, Score>,
    pub per_query: BTreeMap<String, PerQueryScore>,
    pub n_queries: usize,
}

impl BenchReport {
    /// Rebuilds the per-type means from the per-query rows; emitted reports
    /// carry everything needed to verify the aggregation.
    pub fn recompute_means(&self) -> BTreeMap<TaskType, Score> {
        let mut sums: BTreeMap<TaskType, (Score, i128)> = BTreeMap::new();
        for pq in self.per_query.values() {
            let entry = sums.entry(pq.task_type).or_insert((Score::ZERO, 0));
            entry.0 = entry.0 + pq.score;
            entry.1 += 1;
        }
        sums.into_iter()
            .map(|(ty, (sum, n))| (ty, sum / Score::from_int(n)))
            .collect()
    }
}

/// Benchmark scoring: per query, the fraction of that task's checkpoints the
/// judge accepts against the trajectory's final outputs; per task type, the
/// arithmetic mean over its queries. `in_flight` bounds concurrent judging.
pub async fn bench_score(
    tasks: &[TaskRecord],
    records: &[TrajectoryRecord],
    judge: &dyn Judge,
    in_flight: usize,
) -> Result<BenchReport, AnalysisError> {
    let by_id: BTreeMap<&str, &TaskRecord> =
        tasks.iter().map(|t| (t.id.as_str(), t)).collect();

    let mut paired = Vec::with_capacity(records.len());
    let mut seen_queries = BTreeMap::new();
    for record in records {
        let t = &record.trajectory;
        let task = by_id.get(t.query_id.as_str()).copied().ok_or_else(|| {
            AnalysisError::UnmatchedTrajectory {
                trajectory_id: t.id.clone(),
                query_id: t.query_id.clone(),
            }
        })?;
        if seen_queries.insert(t.query_id.clone(), ()).is_some() {
            return Err(AnalysisError::DuplicateTrajectory {
                query_id: t.query_id.clone(),
            });
        }
        if task.checkpoints.is_empty() {
            return Err(AnalysisError::EmptyCheckpoints {
                query_id: task.id.clone(),
            });
        }
        paired.push((task, t));
    }

    let results: Vec<Result<(String, PerQueryScore), AnalysisError>> =
        stream::iter(paired.into_iter().map(|(task, trajectory)| async move {
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
            let score = reflect_reward(&decisions, &task.checkpoints)?;
            Ok((
                task.id.clone(),
                PerQueryScore {
                    task_type: task.task_type,
                    score,
                },
            ))
        }))
        .buffer_unordered(in_flight.max(1))
        .collect()
        .await;

    let mut per_query = BTreeMap::new();
    for result in results {
        let (id, pq) = result?;
        per_query.insert(id, pq);
    }

    let report = BenchReport {
        per_task_type: BTreeMap::new(),
        n_queries: per_query.len(),
        per_query,
    };
    Ok(BenchReport {
        per_task_type: report.recompute_means(),
        ..report
    })
}

/// Mean R_plan over the records. Every record must be scored and carry the
/// plan dimension; an empty input has no mean.
pub fn plan_score_aggregate(records: &[TrajectoryRecord]) -> Result<Score, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut sum = Score::ZERO;
    for record in records {
        let plan = record
            .reward_vector
            .as_ref()
            .and_then(|v| v.plan)
            .ok_or_else(|| AnalysisError::MissingDimension {
                trajectory_id: record.trajectory.id.clone(),
                dimension: Dimension::Plan,
            })?;
        sum = sum + plan;
    }
    Ok(sum / Score::from_int(records.len() as i128))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionHistogram {
    pub under_count: usize,
    pub good_count: usize,
    pub over_count: usize,
    pub n_reflections: usize,
    pub under_pct: f64,
    pub good_pct: f64,
    pub over_pct: f64,
    /// The classification rubric these labels came from.
    pub rubric: RubricInfo,
}

/// The judged segment for one reflection instance: the tool results it
/// reflects on, the reflection itself, and what the agent did next. Scripted
/// judges key on this exact text, so the assembly is fixed.
pub fn reflection_segment(trajectory: &Trajectory, turn_pos: usize, tag_pos: usize) -> String {
    let turn = &trajectory.turns[turn_pos];
    let before: Vec<&str> = turn_pos
        .checked_sub(1)
        .map(|p| {
            trajectory.turns[p]
                .tags_of_kind(&TagKind::ToolResult)
                .map(|t| t.content.as_str())
                .collect()
        })
        .unwrap_or_default();
    let reflection = &turn.tags[tag_pos].content;
    let after: Vec<&str> = turn.tags[tag_pos + 1..]
        .iter()
        .map(|t| t.content.as_str())
        .collect();
    format!(
        "[results]\n{}\n[reflection]\n{}\n[continuation]\n{}",
        before.join("\n"),
        reflection,
        after.join("\n")
    )
}

/// Classifies every reflection tag instance (not per trajectory; middle and
/// final turns each carry one) and reports label percentages with counts.
pub async fn reflection_quality_histogram(
    records: &[TrajectoryRecord],
    judge: &dyn Judge,
    in_flight: usize,
) -> Result<ReflectionHistogram, AnalysisError> {
    let mut requests = Vec::new();
    for record in records {
        let t = &record.trajectory;
        for (turn_pos, turn) in t.turns.iter().enumerate() {
            for (tag_pos, tag) in turn.tags.iter().enumerate() {
                if tag.kind == TagKind::Reflection {
                    requests.push(JudgeRequest::reflection(
                        t.query_id.clone(),
                        reflection_segment(t, turn_pos, tag_pos),
                    ));
                }
            }
        }
    }
    if requests.is_empty() {
        return Err(AnalysisError::NoReflections);
    }
    let n = requests.len();

    let labels: Vec<Result<QualityLabel, JudgeError>> =
        stream::iter(requests.iter().map(|req| judge.classify_reflection(req)))
            .buffer_unordered(in_flight.max(1))
            .collect()
            .await;

    let (mut under, mut good, mut over) = (0usize, 0usize, 0usize);
    for label in labels {
        match label? {
            QualityLabel::Under => under += 1,
            QualityLabel::Good => good += 1,
            QualityLabel::Over => over += 1,
        }
    }
    let pct = |c: usize| c as f64 * 100.0 / n as f64;
    Ok(ReflectionHistogram {
        under_count: under,
        good_count: good,
        over_count: over,
        n_reflections: n,
        under_pct: pct(under),
        good_pct: pct(good),
        over_pct: pct(over),
        rubric: judge.rubric(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    Bench(BenchReport),
    Reflection(ReflectionHistogram),
}

/// Renders a report deterministically; emitting the same report twice gives
/// byte-identical output.
pub fn render_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => match report {
            Report::Bench(b) => {
                let mut out = String::from("task_type,mean_score,n_queries\n");
                for (ty, mean) in &b.per_task_type {
                    let n = b
                        .per_query
                        .values()
                        .filter(|pq| pq.task_type == *ty)
                        .count();
                    out.push_str(&format!("{ty},{},{n}\n", mean.to_f64()));
                }
                out
            }
            Report::Reflection(h) => {
                let mut out = String::from("label,count,pct\n");
                out.push_str(&format!("under,{},{:.1}\n", h.under_count, h.under_pct));
                out.push_str(&format!("good,{},{:.1}\n", h.good_count, h.good_pct));
                out.push_str(&format!("over,{},{:.1}\n", h.over_count, h.over_pct));
                out
            }
        },
    }
}

pub fn emit_report(
    report: &Report,
    format: ReportFormat,
    path: &Path,
) -> Result<(), AnalysisError> {
    std::fs::write(path, render_report(report, format)).map_err(|e| AnalysisError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
