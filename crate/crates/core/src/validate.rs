//! Per-turn format validation.
//!
//! Each turn is graded against the canonical tag pattern for its position:
//! s_t = (n_valid + order) / (n_required + 1), where n_valid counts pattern
//! slots whose tag kind appears the right number of times with non-empty
//! content, order is 1 when the pattern-kind subsequence matches the pattern
//! exactly, and n_required is the pattern length. The trajectory-level format
//! score is the minimum over turns, so one malformed turn caps the whole run.

use serde::Serialize;

use crate::schema::{TagKind, TagSchema, TurnKind};
use crate::score::Score;
use crate::trajectory::{Trajectory, TrajectoryError, Turn};

/// How one pattern kind fared in a turn.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotReport {
    pub kind: TagKind,
    /// Multiplicity of this kind in the pattern.
    pub expected: usize,
    /// Occurrences in the turn (after trailing-pair collapsing).
    pub found: usize,
    /// Occurrences with whitespace-only content, extras included.
    pub empty: usize,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TurnValidation {
    pub index: usize,
    pub turn_kind: TurnKind,
    pub slots: Vec<SlotReport>,
    pub order_ok: bool,
    pub n_valid: usize,
    pub n_required: usize,
    pub score: Score,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryValidation {
    pub turns: Vec<TurnValidation>,
    /// min over per-turn scores.
    pub format_score: Score,
}

fn distinct_in_pattern(pattern: &[TagKind]) -> Vec<(TagKind, usize)> {
    let mut out: Vec<(TagKind, usize)> = Vec::new();
    for kind in pattern {
        match out.iter_mut().find(|(k, _)| k == kind) {
            Some((_, n)) => *n += 1,
            None => out.push((kind.clone(), 1)),
        }
    }
    out
}

/// Extra complete (tool_call, tool_result) pairs appended after a pattern
/// ending in that pair count as repeats of the last two slots, not as
/// violations. Returns the number of collapsed pairs.
fn collapsed_pairs(seq: &[&TagKind], pattern: &[TagKind], allow: bool) -> Option<usize> {
    if !allow || pattern.len() < 2 {
        return None;
    }
    let tail = [TagKind::ToolCall, TagKind::ToolResult];
    if pattern[pattern.len() - 2..] != tail {
        return None;
    }
    if seq.len() <= pattern.len() || !(seq.len() - pattern.len()).is_multiple_of(2) {
        return None;
    }
    let k = (seq.len() - pattern.len()) / 2;
    let matches_pattern = seq[..pattern.len()]
        .iter()
        .zip(pattern)
        .all(|(a, b)| **a == *b);
    let matches_tail = seq[pattern.len()..]
        .chunks(2)
        .all(|c| *c[0] == tail[0] && *c[1] == tail[1]);
    (matches_pattern && matches_tail).then_some(k)
}

pub fn validate_turn(turn: &Turn, schema: &TagSchema) -> TurnValidation {
    let pattern = schema.canonical_pattern(turn.kind);
    let n_required = pattern.len();

    let in_pattern: Vec<&TagKind> = turn
        .tags
        .iter()
        .map(|t| &t.kind)
        .filter(|k| pattern.contains(*k))
        .collect();

    let k_pairs = collapsed_pairs(&in_pattern, pattern, schema.allow_trailing_pair_repeat);
    let order_ok = k_pairs.is_some()
        || (in_pattern.len() == pattern.len()
            && in_pattern.iter().zip(pattern).all(|(a, b)| **a == *b));

    let collapse = k_pairs.unwrap_or(0);
    let mut slots = Vec::new();
    let mut n_valid = 0usize;
    for (kind, expected) in distinct_in_pattern(pattern) {
        let occurrences: Vec<_> = turn.tags_of_kind(&kind).collect();
        let raw_found = occurrences.len();
        let found = if kind == TagKind::ToolCall || kind == TagKind::ToolResult {
            raw_found - collapse.min(raw_found)
        } else {
            raw_found
        };
        let empty = occurrences.iter().filter(|t| t.is_empty()).count();
        let valid = found == expected && empty == 0;
        if valid {
            n_valid += expected;
        }
        slots.push(SlotReport {
            kind,
            expected,
            found,
            empty,
            valid,
        });
    }

    let score = crate::reward::turn_format_score(n_valid, n_required, order_ok);
    TurnValidation {
        index: turn.index,
        turn_kind: turn.kind,
        slots,
        order_ok,
        n_valid,
        n_required,
        score,
    }
}

pub fn validate_trajectory(
    trajectory: &Trajectory,
    schema: &TagSchema,
) -> Result<TrajectoryValidation, TrajectoryError> {
    if trajectory.turns.is_empty() {
        return Err(TrajectoryError::NoTurns);
    }
    let turns: Vec<TurnValidation> = trajectory
        .turns
        .iter()
        .map(|t| validate_turn(t, schema))
        .collect();
    let format_score = turns.iter().map(|t| t.score).min().unwrap();
    Ok(TrajectoryValidation {
        turns,
        format_score,
    })
}
