//! Trajectory scoring for multi-turn visual-generation agents.
//!
//! The pipeline: parse a tagged transcript into a [`trajectory::Trajectory`],
//! validate each turn against the canonical tag pattern for its position,
//! compute the five sub-rewards (reflection, plan, format, tool, result) on
//! exact rationals, and aggregate them into a total. Around that sit dataset
//! I/O (line-delimited JSON), the perfect-score SFT filter, and benchmark
//! aggregation. External evaluators hide behind the [`judge::Judge`] trait.
//!
//! Floating point appears exactly once, at the output boundary
//! ([`score::Score::to_f64`]); everything upstream is `Ratio<i128>`.

pub mod analysis;
pub mod config;
pub mod dataset;
pub mod fixtures;
pub mod judge;
pub mod parse;
pub mod reward;
pub mod schema;
pub mod score;
pub mod trajectory;
pub mod validate;

#[cfg(test)]
pub(crate) mod testsupport;

pub use score::Score;
pub use trajectory::Trajectory;
