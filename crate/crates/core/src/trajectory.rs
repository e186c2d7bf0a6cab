//! The trajectory data model: turns, tagged sections, tool invocations,
//! and the output manifest.

use serde::{Deserialize, Serialize};

use crate::schema::{classify_turn, TagKind, TurnKind};

/// One tagged section of a turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagInstance {
    pub kind: TagKind,
    /// Raw text between the opening and closing markers.
    pub content: String,
    /// Content byte offsets into the source transcript, `(start, end)`.
    /// `(0, 0)` for tags that were never parsed from a document.
    pub byte_span: (usize, usize),
}

impl TagInstance {
    pub fn new(kind: TagKind, content: impl Into<String>) -> Self {
        TagInstance {
            kind,
            content: content.into(),
            byte_span: (0, 0),
        }
    }

    /// Emptiness uses the whitespace-trimmed content; the raw text is kept.
    pub fn is_empty(&self) -> bool {
        self.content.trim().is_empty()
    }
}

/// Binary outcome of one tool execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolStatus {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolOutcome {
    pub status: ToolStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ToolOutcome {
    pub fn success() -> Self {
        ToolOutcome {
            status: ToolStatus::Success,
            detail: None,
        }
    }

    pub fn failure(detail: impl Into<String>) -> Self {
        ToolOutcome {
            status: ToolStatus::Failure,
            detail: Some(detail.into()),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status == ToolStatus::Success
    }
}

/// One tool call anchored to a `tool_call` tag of its turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInvocation {
    pub tool_name: String,
    pub arguments: serde_json::Value,
    pub outcome: ToolOutcome,
}

/// JSON payload carried inside a `tool_call` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCallPayload {
    pub tool: String,
    #[serde(default)]
    pub arguments: serde_json::Value,
}

/// JSON payload carried inside a `tool_result` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResultPayload {
    pub status: ToolStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// One dialogue turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    /// 1-based position within the trajectory.
    pub index: usize,
    pub kind: TurnKind,
    /// Tags in document order.
    pub tags: Vec<TagInstance>,
    /// Tool calls in document order, paired with their results.
    pub tool_invocations: Vec<ToolInvocation>,
}

impl Turn {
    pub fn tags_of_kind<'t>(&'t self, kind: &TagKind) -> impl Iterator<Item = &'t TagInstance> + 't {
        let kind = kind.clone();
        self.tags.iter().filter(move |t| t.kind == kind)
    }

    /// Content of the first tag of `kind`, if any.
    pub fn first_content(&self, kind: &TagKind) -> Option<&str> {
        self.tags_of_kind(kind).next().map(|t| t.content.as_str())
    }
}

/// Counts of produced artifacts, the inputs to the result reward.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutputManifest {
    #[serde(rename = "images")]
    pub image_count: u32,
    #[serde(rename = "videos")]
    pub video_count: u32,
    #[serde(default, rename = "artifacts")]
    pub artifact_ids: Vec<String>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TrajectoryError {
    #[error("trajectory has no turns")]
    NoTurns,
    #[error("turn indices are not contiguous 1..=T (turn {position} has index {index})")]
    NonContiguousIndices { position: usize, index: usize },
    #[error("turn {index} has kind {found:?}, expected {expected:?}")]
    WrongTurnKind {
        index: usize,
        found: TurnKind,
        expected: TurnKind,
    },
    #[error("turn {index} has {invocations} tool invocations but only {tags} tool_call tags")]
    UnanchoredInvocation {
        index: usize,
        invocations: usize,
        tags: usize,
    },
}

/// A complete multi-turn run: tagged turns plus the output manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: String,
    pub query_id: String,
    pub turns: Vec<Turn>,
    pub outputs: OutputManifest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
}

impl Trajectory {
    /// Checks the structural invariants: at least one turn, contiguous
    /// 1-based indices, positional turn kinds (exactly one Final), and
    /// every tool invocation anchored to a `tool_call` tag of its turn.
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.turns.is_empty() {
            return Err(TrajectoryError::NoTurns);
        }
        let total = self.turns.len();
        for (pos, turn) in self.turns.iter().enumerate() {
            if turn.index != pos + 1 {
                return Err(TrajectoryError::NonContiguousIndices {
                    position: pos + 1,
                    index: turn.index,
                });
            }
            let expected = classify_turn(turn.index, total);
            if turn.kind != expected {
                return Err(TrajectoryError::WrongTurnKind {
                    index: turn.index,
                    found: turn.kind,
                    expected,
                });
            }
            let call_tags = turn.tags_of_kind(&TagKind::ToolCall).count();
            if turn.tool_invocations.len() > call_tags {
                return Err(TrajectoryError::UnanchoredInvocation {
                    index: turn.index,
                    invocations: turn.tool_invocations.len(),
                    tags: call_tags,
                });
            }
        }
        Ok(())
    }

    /// All tool outcomes in trajectory order, the tool-reward input.
    pub fn tool_outcomes(&self) -> Vec<ToolOutcome> {
        self.turns
            .iter()
            .flat_map(|t| t.tool_invocations.iter().map(|i| i.outcome.clone()))
            .collect()
    }

    /// Content of the first turn's planning tag, if present.
    pub fn plan_text(&self) -> Option<&str> {
        self.turns
            .first()
            .and_then(|t| t.first_content(&TagKind::Planning))
    }

    /// Structural equality ignoring byte spans and the raw transcript.
    /// This is the identity preserved by a serialize/parse round trip.
    pub fn structurally_eq(&self, other: &Trajectory) -> bool {
        if self.id != other.id
            || self.query_id != other.query_id
            || self.outputs != other.outputs
            || self.turns.len() != other.turns.len()
        {
            return false;
        }
        self.turns.iter().zip(&other.turns).all(|(a, b)| {
            a.index == b.index
                && a.kind == b.kind
                && a.tool_invocations == b.tool_invocations
                && a.tags.len() == b.tags.len()
                && a.tags
                    .iter()
                    .zip(&b.tags)
                    .all(|(x, y)| x.kind == y.kind && x.content == y.content)
        })
    }
}
