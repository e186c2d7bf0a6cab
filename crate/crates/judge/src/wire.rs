//! The wire protocol of the remote judge: a minimal chat-completion shape,
//! one request in, one text reply out. The stub server speaks exactly this
//! shape; docs/judge-wire.md pins it byte for byte.
//!
//! Reply parsing is deliberately dumb and deterministic: earliest
//! case-insensitive occurrence of a known token wins, first digit run is
//! the score. No fuzzy matching, no second guesses.

use serde::{Deserialize, Serialize};
use trajlab_core::judge::{JudgeError, QualityLabel, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub model: String,
    pub messages: Vec<WireMessage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub role: String,
    pub content: Vec<WirePart>,
}

/// One content part. Text carries the prompt; image refs are opaque
/// handles the gateway resolves (this crate never fetches pixels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WirePart {
    Text { text: String },
    ImageRef { image_ref: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireReply {
    pub content: String,
}

impl WireRequest {
    /// The single-turn shape every judge call uses: one user message,
    /// prompt text first, then one part per artifact reference.
    pub fn single_turn(model: &str, prompt: String, artifact_refs: &[String]) -> Self {
        let mut content = vec![WirePart::Text { text: prompt }];
        content.extend(artifact_refs.iter().map(|r| WirePart::ImageRef {
            image_ref: r.clone(),
        }));
        WireRequest {
            model: model.to_string(),
            messages: vec![WireMessage {
                role: "user".into(),
                content,
            }],
        }
    }

    /// All text parts joined by newlines. The stub server matches its
    /// canned rules against this.
    pub fn text(&self) -> String {
        let mut parts = Vec::new();
        for msg in &self.messages {
            for part in &msg.content {
                if let WirePart::Text { text } = part {
                    parts.push(text.as_str());
                }
            }
        }
        parts.join("\n")
    }
}

fn malformed(message: impl Into<String>, raw: &str) -> JudgeError {
    JudgeError::MalformedReply {
        message: message.into(),
        raw: raw.to_string(),
    }
}

/// Earliest case-insensitive occurrence of "accept" or "refuse" wins;
/// when both appear the earlier one is the verdict.
pub fn parse_verdict(reply: &str) -> Result<Verdict, JudgeError> {
    let lower = reply.to_lowercase();
    match (lower.find("accept"), lower.find("refuse")) {
        (Some(a), Some(r)) if r < a => Ok(Verdict::Refuse),
        (Some(_), _) => Ok(Verdict::Accept),
        (None, Some(_)) => Ok(Verdict::Refuse),
        (None, None) => Err(malformed("no accept/refuse token in reply", reply)),
    }
}

/// First run of ASCII digits, range-checked against `0..=n`. An
/// out-of-range or unparseable score is a malformed reply, never clamped.
pub fn parse_plan_score(reply: &str, n: u32) -> Result<u32, JudgeError> {
    let bytes = reply.as_bytes();
    let start = match bytes.iter().position(|b| b.is_ascii_digit()) {
        Some(i) => i,
        None => return Err(malformed("no integer in reply", reply)),
    };
    let end = bytes[start..]
        .iter()
        .position(|b| !b.is_ascii_digit())
        .map_or(bytes.len(), |len| start + len);
    let value: u32 = reply[start..end]
        .parse()
        .map_err(|_| malformed("integer too large", reply))?;
    if value > n {
        return Err(malformed(
            format!("score {value} out of range 0..={n}"),
            reply,
        ));
    }
    Ok(value)
}

/// Earliest case-insensitive occurrence of "under", "good", or "over".
pub fn parse_quality_label(reply: &str) -> Result<QualityLabel, JudgeError> {
    let lower = reply.to_lowercase();
    let mut best: Option<(usize, QualityLabel)> = None;
    for (token, label) in [
        ("under", QualityLabel::Under),
        ("good", QualityLabel::Good),
        ("over", QualityLabel::Over),
    ] {
        if let Some(i) = lower.find(token) {
            if best.is_none_or(|(b, _)| i < b) {
                best = Some((i, label));
            }
        }
    }
    best.map(|(_, label)| label)
        .ok_or_else(|| malformed("no under/good/over token in reply", reply))
}
