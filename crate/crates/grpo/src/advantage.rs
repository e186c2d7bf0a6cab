//! Group-relative advantage normalization.

use serde::{Deserialize, Serialize};

use crate::GrpoError;

/// How a sampled reward becomes the advantage scalar in the simulator.
/// FixedAffine ((r - b) / c) keeps every conditional moment in closed
/// form, which is what makes the oracle checks possible; GroupNormalized
/// is the estimator as actually trained with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AdvantageMode {
    GroupNormalized,
    FixedAffine { b: f64, c: f64 },
}

/// Below this, a group's reward spread counts as zero. Far below any
/// meaningful resolution of rewards living in [0, 1] on a 0.1-ish grid.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// (r_i - mean) / population std, or exactly zero for every member when
/// the spread is degenerate (std < epsilon). Normalization is undefined
/// for groups smaller than 2.
pub fn group_advantages(rewards: &[f64], epsilon: f64) -> Result<Vec<f64>, GrpoError> {
    let (mean, std) = group_stats(rewards)?;
    if std < epsilon {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// The advantage of the first group member alone; allocation-free for the
/// simulator's inner loops. Identical arithmetic to `group_advantages`.
pub fn first_advantage(rewards: &[f64], epsilon: f64) -> Result<f64, GrpoError> {
    let (mean, std) = group_stats(rewards)?;
    if std < epsilon {
        return Ok(0.0);
    }
    Ok((rewards[0] - mean) / std)
}

fn group_stats(rewards: &[f64]) -> Result<(f64, f64), GrpoError> {
    if rewards.len() < 2 {
        return Err(GrpoError::GroupTooSmall { got: rewards.len() });
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}
