//! Deterministic trajectory fixtures. Same seed, same trajectory, no RNG
//! dependency: a splitmix64 walk drives every choice. Generated contents
//! avoid `<` and the turn separator, so serialize then parse is lossless.

use crate::schema::{classify_turn, TagKind, TagSchema, TurnKind};
use crate::trajectory::{
    OutputManifest, TagInstance, ToolCallPayload, ToolInvocation, ToolOutcome, ToolResultPayload,
    ToolStatus, Trajectory, Turn,
};

const WORDS: &[&str] = &[
    "render", "the", "subject", "first", "then", "check", "lighting", "against", "reference",
    "palette", "composition", "needs", "another", "pass", "keep", "aspect", "ratio", "fixed",
    "crop", "tighter", "on", "detail", "soft", "shadows", "look", "right", "color", "balance",
    "holds", "across", "frames",
];

const TOOLS: &[&str] = &["image_gen", "image_edit", "video_gen", "compose"];

struct Mix(u64);

impl Mix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

#[derive(Debug, Clone)]
pub struct FixtureOptions {
    pub max_turns: usize,
    /// Sometimes append extra (tool_call, tool_result) pairs to non-final
    /// turns, exercising the trailing-repeat tolerance.
    pub extra_tool_pairs: bool,
    /// Sometimes insert a non-canonical tag, which parsing must retain.
    pub unknown_tags: bool,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions {
            max_turns: 5,
            extra_tool_pairs: true,
            unknown_tags: true,
        }
    }
}

fn prose(mix: &mut Mix) -> String {
    let n = 3 + mix.below(6) as usize;
    (0..n)
        .map(|_| WORDS[mix.below(WORDS.len() as u64) as usize])
        .collect::<Vec<_>>()
        .join(" ")
}

fn tool_pair(mix: &mut Mix) -> (TagInstance, TagInstance, ToolInvocation) {
    let tool = TOOLS[mix.below(TOOLS.len() as u64) as usize];
    let arguments = serde_json::json!({ "prompt": prose(mix) });
    let call_payload = ToolCallPayload {
        tool: tool.to_string(),
        arguments: arguments.clone(),
    };
    let ok = mix.chance(4, 5);
    let result_payload = ToolResultPayload {
        status: if ok {
            ToolStatus::Success
        } else {
            ToolStatus::Failure
        },
        detail: (!ok).then(|| prose(mix)),
    };
    let call = TagInstance::new(
        TagKind::ToolCall,
        serde_json::to_string(&call_payload).unwrap(),
    );
    let result = TagInstance::new(
        TagKind::ToolResult,
        serde_json::to_string(&result_payload).unwrap(),
    );
    let invocation = ToolInvocation {
        tool_name: tool.to_string(),
        arguments,
        outcome: ToolOutcome {
            status: result_payload.status,
            detail: result_payload.detail,
        },
    };
    (call, result, invocation)
}

pub fn trajectory(seed: u64) -> Trajectory {
    trajectory_with(seed, &FixtureOptions::default())
}

pub fn trajectory_with(seed: u64, options: &FixtureOptions) -> Trajectory {
    let mut mix = Mix(seed);
    let schema = TagSchema::default();
    let total = 1 + mix.below(options.max_turns.max(1) as u64) as usize;

    let mut turns = Vec::with_capacity(total);
    for index in 1..=total {
        let kind = classify_turn(index, total);
        let mut tags = Vec::new();
        let mut invocations = Vec::new();
        for slot in schema.canonical_pattern(kind) {
            match slot {
                TagKind::ToolCall => {
                    let (call, result, invocation) = tool_pair(&mut mix);
                    tags.push(call);
                    tags.push(result);
                    invocations.push(invocation);
                }
                TagKind::ToolResult => {} // emitted with its call
                other => tags.push(TagInstance::new(other.clone(), prose(&mut mix))),
            }
        }
        if options.extra_tool_pairs && kind != TurnKind::Final && mix.chance(1, 3) {
            for _ in 0..=mix.below(2) {
                let (call, result, invocation) = tool_pair(&mut mix);
                tags.push(call);
                tags.push(result);
                invocations.push(invocation);
            }
        }
        if options.unknown_tags && mix.chance(1, 4) {
            tags.push(TagInstance::new(
                TagKind::Unknown("aside".into()),
                prose(&mut mix),
            ));
        }
        turns.push(Turn {
            index,
            kind,
            tags,
            tool_invocations: invocations,
        });
    }

    let image_count = mix.below(4) as u32;
    let video_count = mix.below(2) as u32;
    let artifact_ids = (0..image_count)
        .map(|i| format!("img_{i}"))
        .chain((0..video_count).map(|i| format!("vid_{i}")))
        .collect();

    Trajectory {
        id: format!("traj_{seed:08x}"),
        query_id: format!("q_{:03}", seed % 1000),
        turns,
        outputs: OutputManifest {
            image_count,
            video_count,
            artifact_ids,
        },
        raw_text: None,
    }
}
