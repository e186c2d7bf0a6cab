// Shared between the cli and acceptance test binaries; each uses a
// different subset.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_trajlab"))
}

pub struct RunResult {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_env(args: &[&str], envs: &[(&str, &str)]) -> RunResult {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    // Keep host judge variables from leaking into test processes.
    cmd.env_remove("TRAJLAB_JUDGE_ENDPOINT");
    cmd.env_remove("TRAJLAB_TOKEN_ENV");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn trajlab");
    RunResult {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf8 stderr"),
    }
}

pub fn run(args: &[&str]) -> RunResult {
    run_env(args, &[])
}

pub const QUERY: &str = "a red fox in watercolor";

pub fn first_turn() -> String {
    [
        "<thinking>Two checkpoints to hit.</thinking>",
        "<planning>1. render the subject 2. adjust palette</planning>",
        "<thinking>Start with the render.</thinking>",
        "<tool_call>{\"tool\": \"t2i\", \"arguments\": {\"prompt\": \"red fox, watercolor\"}}</tool_call>",
        "<tool_result>{\"status\": \"success\"}</tool_result>",
    ]
    .join("\n")
}

pub fn first_turn_without_plan() -> String {
    first_turn().replace(
        "<planning>1. render the subject 2. adjust palette</planning>\n",
        "",
    )
}

pub fn middle_turn() -> String {
    [
        "<reflection>Palette too saturated, regenerate.</reflection>",
        "<thinking>Lower saturation.</thinking>",
        "<tool_call>{\"tool\": \"t2i\", \"arguments\": {\"prompt\": \"red fox, muted watercolor\"}}</tool_call>",
        "<tool_result>{\"status\": \"success\"}</tool_result>",
    ]
    .join("\n")
}

pub fn final_turn() -> String {
    [
        "<reflection>Second render matches the brief.</reflection>",
        "<thinking>Done.</thinking>",
        "<final_answer>One muted watercolor fox, attached.</final_answer>",
    ]
    .join("\n")
}

pub fn trajectory_value(id: &str, query_id: &str, turns: &[String]) -> serde_json::Value {
    serde_json::json!({
        "schema_version": 1,
        "id": id,
        "query_id": query_id,
        "source_model": "demo-model",
        "turns": turns,
        "outputs": {"images": 1, "videos": 0, "artifacts": [format!("img_{id}")]},
    })
}

pub fn perfect_trajectory(id: &str, query_id: &str) -> serde_json::Value {
    trajectory_value(id, query_id, &[first_turn(), middle_turn(), final_turn()])
}

pub fn task_value(id: &str, query: &str) -> serde_json::Value {
    serde_json::json!({
        "schema_version": 1,
        "id": id,
        "task_type": "single_img",
        "query": query,
        "checkpoints": [
            {"id": "cp_subject", "description": "a fox is present"},
            {"id": "cp_style", "description": "watercolor style"},
        ],
        "expected_images": 1,
        "expected_videos": 0,
    })
}

pub fn write_jsonl(path: &Path, values: &[serde_json::Value]) {
    let mut text = String::new();
    for v in values {
        text.push_str(&v.to_string());
        text.push('\n');
    }
    std::fs::write(path, text).expect("write fixture");
}

pub fn write_file(path: &Path, text: &str) {
    std::fs::write(path, text).expect("write fixture");
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Script accepting cp_subject, refusing cp_style, plan 5 of 6: the
/// 13/15-total replay for the canonical fixture.
pub fn replay_script() -> serde_json::Value {
    serde_json::json!({
        "checkpoints": [
            {"query": QUERY, "checkpoint_id": "cp_subject", "verdict": "accept"},
            {"query": QUERY, "checkpoint_id": "cp_style", "verdict": "refuse"},
        ],
        "plans": [{"query": QUERY, "score": 5}],
        "reflections": [],
    })
}
