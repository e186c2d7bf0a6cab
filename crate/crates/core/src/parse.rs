//! Tolerant transcript parser.
//!
//! A transcript is a sequence of turn blocks separated by a separator line,
//! each block holding `<name>content</name>` tagged sections. The parser
//! never discards input: every byte of the document ends up in a tag marker,
//! tag content, a separator line, or a reported interstitial span, and
//! malformed structure is reported through diagnostics instead of errors.

use serde::Serialize;

use crate::schema::{classify_turn, TagKind, TagSchema};
use crate::trajectory::{
    OutputManifest, TagInstance, ToolCallPayload, ToolInvocation, ToolOutcome, ToolResultPayload,
    Trajectory, Turn,
};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("document is empty")]
    EmptyDocument,
}

/// Non-fatal findings, attributed to the 1-based turn they occurred in.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// An opening marker with no matching close; content ran to block end.
    UnterminatedTag { turn: usize, name: String },
    /// A closing marker with no open tag.
    StrayCloseTag { turn: usize, name: String },
    /// Non-whitespace text outside any tag.
    LooseText { turn: usize, span: (usize, usize) },
    /// A separator-delimited block with no content at all.
    EmptyTurn { turn: usize },
    /// A `tool_call` tag whose content is not a valid call payload.
    BadToolCallPayload {
        turn: usize,
        call: usize,
        message: String,
    },
    /// A `tool_result` tag whose content is not a valid result payload.
    BadToolResultPayload {
        turn: usize,
        call: usize,
        message: String,
    },
    /// A `tool_call` with no positionally matching `tool_result`.
    MissingToolResult { turn: usize, call: usize },
    /// A `tool_result` beyond the last `tool_call` of its turn.
    ExtraToolResult { turn: usize, index: usize },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::UnterminatedTag { turn, name } => {
                write!(f, "turn {turn}: <{name}> is never closed")
            }
            Diagnostic::StrayCloseTag { turn, name } => {
                write!(f, "turn {turn}: </{name}> has no matching open tag")
            }
            Diagnostic::LooseText { turn, span } => write!(
                f,
                "turn {turn}: text outside any tag at bytes {}..{}",
                span.0, span.1
            ),
            Diagnostic::EmptyTurn { turn } => write!(f, "turn {turn}: block is empty"),
            Diagnostic::BadToolCallPayload {
                turn,
                call,
                message,
            } => write!(f, "turn {turn}, call {call}: bad tool_call payload: {message}"),
            Diagnostic::BadToolResultPayload {
                turn,
                call,
                message,
            } => write!(
                f,
                "turn {turn}, call {call}: bad tool_result payload: {message}"
            ),
            Diagnostic::MissingToolResult { turn, call } => {
                write!(f, "turn {turn}, call {call}: no tool_result for this call")
            }
            Diagnostic::ExtraToolResult { turn, index } => write!(
                f,
                "turn {turn}: tool_result {index} has no preceding tool_call"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDocument {
    pub turns: Vec<Turn>,
    pub diagnostics: Vec<Diagnostic>,
    /// Byte spans covered by neither tags, markers, nor separator lines.
    /// Whitespace gaps between tags land here and are not diagnosed.
    pub interstitial: Vec<(usize, usize)>,
    pub total_bytes: usize,
    /// `total_bytes` minus the interstitial bytes.
    pub accounted_bytes: usize,
}

impl ParsedDocument {
    pub fn trajectory(
        &self,
        id: impl Into<String>,
        query_id: impl Into<String>,
        outputs: OutputManifest,
    ) -> Trajectory {
        Trajectory {
            id: id.into(),
            query_id: query_id.into(),
            turns: self.turns.clone(),
            outputs,
            raw_text: None,
        }
    }
}

/// Parses a transcript against `schema`. The only hard failure is an
/// entirely empty document; everything else degrades to diagnostics.
pub fn parse(text: &str, schema: &TagSchema) -> Result<ParsedDocument, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::EmptyDocument);
    }

    let blocks = split_blocks(text, &schema.turn_separator);
    let total = blocks.len();
    let mut turns = Vec::with_capacity(total);
    let mut diagnostics = Vec::new();
    let mut interstitial = Vec::new();

    for (pos, &(bs, be)) in blocks.iter().enumerate() {
        let index = pos + 1;
        let mut gaps = Vec::new();
        let tags = scan_block(text, bs, be, index, schema, &mut diagnostics, &mut gaps);
        if text[bs..be].trim().is_empty() && tags.is_empty() {
            diagnostics.push(Diagnostic::EmptyTurn { turn: index });
        }
        for &span in &gaps {
            if !text[span.0..span.1].trim().is_empty() {
                diagnostics.push(Diagnostic::LooseText { turn: index, span });
            }
        }
        interstitial.extend(gaps);

        let tool_invocations = derive_invocations(&tags, index, &mut diagnostics);
        turns.push(Turn {
            index,
            kind: classify_turn(index, total),
            tags,
            tool_invocations,
        });
    }

    let loose: usize = interstitial.iter().map(|(s, e)| e - s).sum();
    Ok(ParsedDocument {
        turns,
        diagnostics,
        interstitial,
        total_bytes: text.len(),
        accounted_bytes: text.len() - loose,
    })
}

/// Renders a trajectory back to transcript text. Tag contents are emitted
/// verbatim, one tag per group of lines, turns joined by the separator line.
pub fn serialize_trajectory(t: &Trajectory, schema: &TagSchema) -> String {
    let sep = format!("\n{}\n", schema.turn_separator);
    t.turns
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
        .collect::<Vec<_>>()
        .join(&sep)
}

/// Block spans between separator lines. A separator line is any line whose
/// trimmed content equals the separator exactly.
fn split_blocks(text: &str, separator: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut blocks = Vec::new();
    let mut block_start = 0usize;
    let mut line_start = 0usize;
    while line_start <= text.len() {
        let line_end = bytes[line_start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| line_start + p)
            .unwrap_or(text.len());
        if text[line_start..line_end].trim() == separator {
            blocks.push((block_start, line_start));
            block_start = (line_end + 1).min(text.len());
        }
        if line_end == text.len() {
            break;
        }
        line_start = line_end + 1;
    }
    blocks.push((block_start, text.len()));
    blocks
}

fn is_name_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// `<name>` at `at`; returns (name, end past `>`).
fn parse_open_marker(bytes: &[u8], at: usize, limit: usize) -> Option<(usize, usize)> {
    let mut j = at + 1;
    while j < limit && is_name_byte(bytes[j]) {
        j += 1;
    }
    if j > at + 1 && j < limit && bytes[j] == b'>' {
        Some((at + 1, j))
    } else {
        None
    }
}

/// `</name>` at `at`; returns (name, end past `>`).
fn parse_close_marker(bytes: &[u8], at: usize, limit: usize) -> Option<(usize, usize)> {
    if at + 1 >= limit || bytes[at + 1] != b'/' {
        return None;
    }
    let mut j = at + 2;
    while j < limit && is_name_byte(bytes[j]) {
        j += 1;
    }
    if j > at + 2 && j < limit && bytes[j] == b'>' {
        Some((at + 2, j))
    } else {
        None
    }
}

fn scan_block(
    text: &str,
    bs: usize,
    be: usize,
    turn: usize,
    schema: &TagSchema,
    diagnostics: &mut Vec<Diagnostic>,
    gaps: &mut Vec<(usize, usize)>,
) -> Vec<TagInstance> {
    let bytes = text.as_bytes();
    let mut tags = Vec::new();
    let mut i = bs;
    let mut gap_start = bs;
    while i < be {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        if let Some((name_s, name_e)) = parse_close_marker(bytes, i, be) {
            if gap_start < i {
                gaps.push((gap_start, i));
            }
            diagnostics.push(Diagnostic::StrayCloseTag {
                turn,
                name: text[name_s..name_e].to_string(),
            });
            i = name_e + 1;
            gap_start = i;
            continue;
        }
        let Some((name_s, name_e)) = parse_open_marker(bytes, i, be) else {
            i += 1;
            continue;
        };
        if gap_start < i {
            gaps.push((gap_start, i));
        }
        let name = &text[name_s..name_e];
        let content_start = name_e + 1;
        let close = format!("</{name}>");
        match text[content_start..be].find(&close) {
            Some(rel) => {
                let content_end = content_start + rel;
                tags.push(TagInstance {
                    kind: schema.kind_for_marker(name),
                    content: text[content_start..content_end].to_string(),
                    byte_span: (content_start, content_end),
                });
                i = content_end + close.len();
            }
            None => {
                diagnostics.push(Diagnostic::UnterminatedTag {
                    turn,
                    name: name.to_string(),
                });
                tags.push(TagInstance {
                    kind: schema.kind_for_marker(name),
                    content: text[content_start..be].to_string(),
                    byte_span: (content_start, be),
                });
                i = be;
            }
        }
        gap_start = i;
    }
    if gap_start < be {
        gaps.push((gap_start, be));
    }
    tags
}

/// Pairs the i-th `tool_call` of a turn with its i-th `tool_result`.
/// A call with a malformed payload still consumes its result slot so that
/// later pairs stay aligned.
fn derive_invocations(
    tags: &[TagInstance],
    turn: usize,
    diagnostics: &mut Vec<Diagnostic>,
) -> Vec<ToolInvocation> {
    let calls: Vec<&TagInstance> = tags.iter().filter(|t| t.kind == TagKind::ToolCall).collect();
    let results: Vec<&TagInstance> = tags
        .iter()
        .filter(|t| t.kind == TagKind::ToolResult)
        .collect();

    let mut invocations = Vec::new();
    for (i, call) in calls.iter().enumerate() {
        let payload: ToolCallPayload = match serde_json::from_str(&call.content) {
            Ok(p) => p,
            Err(e) => {
                diagnostics.push(Diagnostic::BadToolCallPayload {
                    turn,
                    call: i,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if payload.tool.trim().is_empty() {
            diagnostics.push(Diagnostic::BadToolCallPayload {
                turn,
                call: i,
                message: "empty tool name".to_string(),
            });
            continue;
        }
        let outcome = match results.get(i) {
            None => {
                diagnostics.push(Diagnostic::MissingToolResult { turn, call: i });
                ToolOutcome::failure("missing tool_result")
            }
            Some(r) => match serde_json::from_str::<ToolResultPayload>(&r.content) {
                Ok(p) => ToolOutcome {
                    status: p.status,
                    detail: p.detail,
                },
                Err(e) => {
                    diagnostics.push(Diagnostic::BadToolResultPayload {
                        turn,
                        call: i,
                        message: e.to_string(),
                    });
                    ToolOutcome::failure("malformed tool_result payload")
                }
            },
        };
        invocations.push(ToolInvocation {
            tool_name: payload.tool,
            arguments: payload.arguments,
            outcome,
        });
    }
    for index in calls.len()..results.len() {
        diagnostics.push(Diagnostic::ExtraToolResult { turn, index });
    }
    invocations
}
