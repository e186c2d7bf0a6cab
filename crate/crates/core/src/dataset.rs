//! Line-delimited JSON persistence for tasks, trajectories, and scores,
//! plus the perfect-score SFT filter.
//!
//! One record per line, UTF-8, each carrying a schema_version field.
//! Trajectory records store turns as tagged text and are re-parsed on load,
//! so the files stay readable and diff-able.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::parse;
use crate::reward::{Checkpoint, Dimension, RewardVector, ScoredTrajectory};
use crate::schema::TagSchema;
use crate::score::Score;
use crate::trajectory::{OutputManifest, Trajectory};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version_default() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskType {
    #[serde(rename = "single_img")]
    SingleImg,
    #[serde(rename = "multi_img")]
    MultiImg,
    #[serde(rename = "img2img")]
    Img2Img,
}

impl std::fmt::Display for TaskType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskType::SingleImg => "single_img",
            TaskType::MultiImg => "multi_img",
            TaskType::Img2Img => "img2img",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub id: String,
    pub task_type: TaskType,
    pub query: String,
    pub checkpoints: Vec<Checkpoint>,
    pub expected_images: u32,
    pub expected_videos: u32,
}

/// On-disk shape of one trajectory line: turns as tagged text.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrajectoryLine {
    #[serde(default = "schema_version_default")]
    schema_version: u32,
    id: String,
    query_id: String,
    source_model: String,
    turns: Vec<String>,
    outputs: OutputManifest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reward: Option<RewardVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub trajectory: Trajectory,
    pub source_model: String,
    pub reward_vector: Option<RewardVector>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: bad or missing field {field:?}: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("duplicate id {id:?} on lines {first_line} and {second_line}")]
    DuplicateId {
        id: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("trajectory {trajectory_id:?} has no reward vector; score it first")]
    UnscoredRecord { trajectory_id: String },
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// serde_json reports missing/unknown fields with the name in backticks;
/// pull it out so errors can say which field broke.
fn field_of(message: &str) -> String {
    let mut parts = message.split('`');
    match (parts.next(), parts.next()) {
        (_, Some(name)) if !name.is_empty() => name.to_string(),
        _ => "record".to_string(),
    }
}

fn schema_err(line: usize, message: impl ToString) -> DatasetError {
    let message = message.to_string();
    DatasetError::Schema {
        line,
        field: field_of(&message),
        message,
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, DatasetError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    Ok(lines)
}

fn check_version(line: usize, version: u32) -> Result<(), DatasetError> {
    if version != SCHEMA_VERSION {
        return Err(DatasetError::Schema {
            line,
            field: "schema_version".into(),
            message: format!("unsupported schema_version {version}, expected {SCHEMA_VERSION}"),
        });
    }
    Ok(())
}

pub fn load_tasks(path: &Path) -> Result<Vec<TaskRecord>, DatasetError> {
    let mut records = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (line, text) in read_lines(path)? {
        let record: TaskRecord =
            serde_json::from_str(&text).map_err(|e| schema_err(line, e))?;
        check_version(line, record.schema_version)?;
        if record.id.trim().is_empty() {
            return Err(DatasetError::Schema {
                line,
                field: "id".into(),
                message: "task id is empty".into(),
            });
        }
        if let Some(cp) = record.checkpoints.iter().find(|c| c.description.trim().is_empty()) {
            return Err(DatasetError::Schema {
                line,
                field: "checkpoints".into(),
                message: format!("checkpoint {:?} has an empty description", cp.id),
            });
        }
        if let Some(&first_line) = seen.get(&record.id) {
            return Err(DatasetError::DuplicateId {
                id: record.id,
                first_line,
                second_line: line,
            });
        }
        seen.insert(record.id.clone(), line);
        records.push(record);
    }
    Ok(records)
}

pub fn save_tasks(path: &Path, records: &[TaskRecord]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut w, record).map_err(|e| schema_err(0, e))?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn load_trajectories(
    path: &Path,
    schema: &TagSchema,
) -> Result<Vec<TrajectoryRecord>, DatasetError> {
    let mut records = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (line, text) in read_lines(path)? {
        let raw: TrajectoryLine =
            serde_json::from_str(&text).map_err(|e| schema_err(line, e))?;
        check_version(line, raw.schema_version)?;
        if raw.turns.is_empty() {
            return Err(DatasetError::Schema {
                line,
                field: "turns".into(),
                message: "trajectory has no turns".into(),
            });
        }
        if let Some(&first_line) = seen.get(&raw.id) {
            return Err(DatasetError::DuplicateId {
                id: raw.id,
                first_line,
                second_line: line,
            });
        }
        seen.insert(raw.id.clone(), line);

        let text = raw.turns.join(&format!("\n{}\n", schema.turn_separator));
        let parsed = parse::parse(&text, schema).map_err(|e| DatasetError::Schema {
            line,
            field: "turns".into(),
            message: e.to_string(),
        })?;
        records.push(TrajectoryRecord {
            trajectory: parsed.trajectory(raw.id, raw.query_id, raw.outputs),
            source_model: raw.source_model,
            reward_vector: raw.reward,
        });
    }
    Ok(records)
}

pub fn save_trajectories(
    path: &Path,
    records: &[TrajectoryRecord],
    schema: &TagSchema,
) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for record in records {
        let turns: Vec<String> = record
            .trajectory
            .turns
            .iter()
            .map(|turn| {
                turn.tags
                    .iter()
                    .map(|tag| {
                        let m = schema.marker_name(&tag.kind);
                        format!("<{m}>{}</{m}>", tag.content)
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            })
            .collect();
        let line = TrajectoryLine {
            schema_version: SCHEMA_VERSION,
            id: record.trajectory.id.clone(),
            query_id: record.trajectory.query_id.clone(),
            source_model: record.source_model.clone(),
            turns,
            outputs: record.trajectory.outputs.clone(),
            reward: record.reward_vector.clone(),
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| schema_err(0, e))?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One scored-trajectory line: float views for humans and plotting, the
/// exact rationals for anything that compares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub trajectory_id: String,
    pub scores: BTreeMap<Dimension, f64>,
    pub total: f64,
    /// dimension → exact rational, "total" keyed separately.
    pub exact: BTreeMap<String, Score>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl ScoreRecord {
    pub fn from_scored(scored: &ScoredTrajectory) -> Self {
        let mut scores = BTreeMap::new();
        let mut exact = BTreeMap::new();
        for dim in Dimension::ALL {
            if let Some(s) = scored.rewards.get(dim) {
                scores.insert(dim, s.to_f64());
                exact.insert(dim.name().to_string(), s);
            }
        }
        exact.insert("total".into(), scored.rewards.total);
        ScoreRecord {
            schema_version: SCHEMA_VERSION,
            trajectory_id: scored.trajectory_id.clone(),
            scores,
            total: scored.rewards.total.to_f64(),
            exact,
            diagnostics: scored.diagnostics.iter().map(|d| d.to_string()).collect(),
        }
    }

    /// Rebuilds the exact vector; None when a required dimension is absent.
    pub fn reward_vector(&self) -> Option<RewardVector> {
        let get = |d: Dimension| self.exact.get(d.name()).copied();
        Some(RewardVector {
            reflection: get(Dimension::Reflection),
            plan: get(Dimension::Plan),
            format: get(Dimension::Format)?,
            tool: get(Dimension::Tool)?,
            result: get(Dimension::Result)?,
            total: self.exact.get("total").copied()?,
        })
    }
}

pub fn load_scores(path: &Path) -> Result<Vec<ScoreRecord>, DatasetError> {
    let mut records = Vec::new();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (line, text) in read_lines(path)? {
        let record: ScoreRecord =
            serde_json::from_str(&text).map_err(|e| schema_err(line, e))?;
        check_version(line, record.schema_version)?;
        if let Some(&first_line) = seen.get(&record.trajectory_id) {
            return Err(DatasetError::DuplicateId {
                id: record.trajectory_id,
                first_line,
                second_line: line,
            });
        }
        seen.insert(record.trajectory_id.clone(), line);
        records.push(record);
    }
    Ok(records)
}

pub fn save_scores(path: &Path, records: &[ScoreRecord]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut w, record).map_err(|e| schema_err(0, e))?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Exact-value requirements for the SFT filter. BTreeMap iteration gives a
/// stable dimension order, so the reported first-failing dimension is
/// deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub required_exact: BTreeMap<Dimension, Score>,
}

impl Default for FilterSpec {
    fn default() -> Self {
        let mut required_exact = BTreeMap::new();
        required_exact.insert(Dimension::Plan, Score::ONE);
        required_exact.insert(Dimension::Format, Score::ONE);
        required_exact.insert(Dimension::Tool, Score::ONE);
        FilterSpec { required_exact }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroppedRecord {
    pub record: TrajectoryRecord,
    /// First requirement the record failed.
    pub reason: Dimension,
}

/// Splits records into (kept, dropped). Kept iff every required dimension
/// equals its required value as a rational; 4/5 is not 1 here, ever.
/// A dimension absent from the vector fails that requirement.
pub fn sft_filter(
    records: Vec<TrajectoryRecord>,
    spec: &FilterSpec,
) -> Result<(Vec<TrajectoryRecord>, Vec<DroppedRecord>), DatasetError> {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for record in records {
        let vector = record
            .reward_vector
            .as_ref()
            .ok_or_else(|| DatasetError::UnscoredRecord {
                trajectory_id: record.trajectory.id.clone(),
            })?;
        let failing = spec
            .required_exact
            .iter()
            .find(|(dim, want)| vector.get(**dim) != Some(**want))
            .map(|(dim, _)| *dim);
        match failing {
            None => kept.push(record),
            Some(reason) => dropped.push(DroppedRecord { record, reason }),
        }
    }
    Ok((kept, dropped))
}
