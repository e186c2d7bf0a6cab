//! Tag vocabulary, turn classification, and the canonical per-turn patterns.
//!
//! A transcript is a sequence of turns, each built from named tagged
//! sections (`<thinking>…</thinking>` and friends). Which sections a turn
//! must contain, and in which order, depends on where the turn sits in the
//! dialogue: the first turn plans and calls a tool, middle turns reflect
//! and call again, the final turn reflects and answers.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Canonical tagged-section kinds. The set is closed per schema version;
/// anything else parses as `Unknown` and is retained, never dropped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagKind {
    Understanding,
    Thinking,
    Planning,
    ToolCall,
    ToolResult,
    Reflection,
    FinalAnswer,
    #[serde(untagged)]
    Unknown(String),
}

impl TagKind {
    pub const CANONICAL: [TagKind; 7] = [
        TagKind::Understanding,
        TagKind::Thinking,
        TagKind::Planning,
        TagKind::ToolCall,
        TagKind::ToolResult,
        TagKind::Reflection,
        TagKind::FinalAnswer,
    ];
}

impl fmt::Display for TagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TagKind::Understanding => "understanding",
            TagKind::Thinking => "thinking",
            TagKind::Planning => "planning",
            TagKind::ToolCall => "tool_call",
            TagKind::ToolResult => "tool_result",
            TagKind::Reflection => "reflection",
            TagKind::FinalAnswer => "final_answer",
            TagKind::Unknown(name) => name,
        };
        f.write_str(name)
    }
}

/// Position of a turn within its trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    First,
    Middle,
    Final,
}

/// First iff index 1 of a multi-turn trajectory; Final iff last.
/// A single-turn trajectory is Final: every trajectory ends with an answer.
///
/// Panics if `index` is out of `1..=total` or `total == 0`.
pub fn classify_turn(index: usize, total: usize) -> TurnKind {
    assert!(total >= 1, "trajectory must have at least one turn");
    assert!(
        (1..=total).contains(&index),
        "turn index {index} out of range 1..={total}"
    );
    if index == total {
        TurnKind::Final
    } else if index == 1 {
        TurnKind::First
    } else {
        TurnKind::Middle
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("tag name {0:?} is not a valid marker name (want [A-Za-z0-9_]+)")]
    BadTagName(String),
    #[error("duplicate tag name {0:?}")]
    DuplicateTagName(String),
    #[error("pattern for {0:?} turns is empty")]
    EmptyPattern(String),
    #[error("turn separator must be a non-empty single line")]
    BadSeparator,
}

/// Schema for the tagged-transcript surface syntax: marker names, the
/// per-turn-kind required patterns, and the turn separator line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TagSchema {
    /// Marker name overrides, canonical kind -> surface name.
    pub tag_names: BTreeMap<String, String>,
    pub first_pattern: Vec<TagKind>,
    pub middle_pattern: Vec<TagKind>,
    pub final_pattern: Vec<TagKind>,
    /// Line that splits turns in a flat transcript.
    pub turn_separator: String,
    /// When a pattern ends with (tool_call, tool_result), tolerate extra
    /// trailing repetitions of that pair (multi-call turns).
    pub allow_trailing_pair_repeat: bool,
}

impl Default for TagSchema {
    fn default() -> Self {
        TagSchema {
            tag_names: BTreeMap::new(),
            first_pattern: vec![
                TagKind::Thinking,
                TagKind::Planning,
                TagKind::Thinking,
                TagKind::ToolCall,
                TagKind::ToolResult,
            ],
            middle_pattern: vec![
                TagKind::Reflection,
                TagKind::Thinking,
                TagKind::ToolCall,
                TagKind::ToolResult,
            ],
            final_pattern: vec![
                TagKind::Reflection,
                TagKind::Thinking,
                TagKind::FinalAnswer,
            ],
            turn_separator: "---turn---".to_string(),
            allow_trailing_pair_repeat: true,
        }
    }
}

fn valid_marker_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl TagSchema {
    /// The required tag sequence for a turn of the given kind.
    pub fn canonical_pattern(&self, kind: TurnKind) -> &[TagKind] {
        match kind {
            TurnKind::First => &self.first_pattern,
            TurnKind::Middle => &self.middle_pattern,
            TurnKind::Final => &self.final_pattern,
        }
    }

    /// Surface marker name for a kind, honoring overrides.
    pub fn marker_name(&self, kind: &TagKind) -> String {
        let canonical = kind.to_string();
        self.tag_names.get(&canonical).cloned().unwrap_or(canonical)
    }

    /// Map a surface marker name back to its kind.
    pub fn kind_for_marker(&self, name: &str) -> TagKind {
        for kind in TagKind::CANONICAL {
            if self.marker_name(&kind) == name {
                return kind;
            }
        }
        TagKind::Unknown(name.to_string())
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        let mut seen = std::collections::BTreeSet::new();
        for kind in TagKind::CANONICAL {
            let name = self.marker_name(&kind);
            if !valid_marker_name(&name) {
                return Err(SchemaError::BadTagName(name));
            }
            if !seen.insert(name.clone()) {
                return Err(SchemaError::DuplicateTagName(name));
            }
        }
        for (label, pattern) in [
            ("first", &self.first_pattern),
            ("middle", &self.middle_pattern),
            ("final", &self.final_pattern),
        ] {
            if pattern.is_empty() {
                return Err(SchemaError::EmptyPattern(label.to_string()));
            }
        }
        if self.turn_separator.trim().is_empty() || self.turn_separator.contains('\n') {
            return Err(SchemaError::BadSeparator);
        }
        Ok(())
    }
}
