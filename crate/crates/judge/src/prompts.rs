//! Prompt templates for the remote backend.
//!
//! The under/good/over reflection rubric has no externally fixed
//! procedure, so it lives here in full, is marked EXPERIMENTAL, and every
//! statistic derived from it carries `rubric_info()` as provenance.
//! Bumping the rubric text means bumping RUBRIC_VERSION.

use trajlab_core::judge::RubricInfo;

pub const RUBRIC_NAME: &str = "reflection-quality";
pub const RUBRIC_VERSION: &str = "1";

pub fn rubric_info() -> RubricInfo {
    RubricInfo {
        name: RUBRIC_NAME.into(),
        version: RUBRIC_VERSION.into(),
        experimental: true,
    }
}

pub fn checkpoint_prompt(query: &str, checkpoint: &str) -> String {
    format!(
        "You are verifying one requirement of a visual generation task.\n\
         \n\
         User query:\n{query}\n\
         \n\
         Requirement:\n{checkpoint}\n\
         \n\
         Inspect the attached artifacts. Reply with exactly one word:\n\
         ACCEPT if the requirement is satisfied, REFUSE if it is not."
    )
}

/// Grades a plan against the three criteria the scorer defines:
/// requirement completeness, logical coherence of the sub-task sequence,
/// and tool-goal matching.
pub fn plan_prompt(query: &str, plan_text: &str, n: u32) -> String {
    format!(
        "You are grading the plan of a visual generation agent on three \
         criteria: (i) requirement completeness, (ii) logical coherence of \
         the sub-task sequence, and (iii) tool-goal matching.\n\
         \n\
         User query:\n{query}\n\
         \n\
         Plan:\n{plan_text}\n\
         \n\
         Reply with one integer from 0 to {n}, where {n} means the plan \
         fully satisfies all three criteria. Put the integer first."
    )
}

/// EXPERIMENTAL. The segment interleaves the tool results the agent saw,
/// the reflection it wrote, and what it did next (see the analysis
/// module's segment assembly).
pub fn reflection_prompt(query: &str, segment: &str) -> String {
    format!(
        "Rubric {RUBRIC_NAME} v{RUBRIC_VERSION} (EXPERIMENTAL).\n\
         You are auditing one reflection step of a visual generation agent. \
         The segment below shows the tool results the agent saw, the \
         reflection it wrote, and how it continued.\n\
         \n\
         User query:\n{query}\n\
         \n\
         {segment}\n\
         \n\
         Classify the reflection. Reply with exactly one word:\n\
         UNDER if the results needed a correction the reflection did not identify,\n\
         OVER if the reflection demanded a correction the results did not need,\n\
         GOOD otherwise."
    )
}
