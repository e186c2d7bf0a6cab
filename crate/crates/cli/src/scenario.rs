//! Simulation scenario files: one TOML document holding the policy, the
//! reward channel (or a state mixture over channels), estimator settings,
//! and optional sweep points.
//!
//! ```toml
//! policy = [0.0, 0.0, 0.0, 0.0]
//!
//! [channel]
//! base = [0.0, 0.25, 0.5, 1.0]
//! noise = { kind = "gaussian", sigma = 0.5 }
//!
//! [estimator]
//! advantage_mode = { mode = "fixed_affine", b = 0.4375, c = 1.0 }
//! samples_outer = 20000
//! samples_inner = 100
//! seed = 7
//!
//! [[sweep]]
//! sigma = 0.0
//! horizon = 1
//! ```

use std::fs;
use std::path::Path;

use serde::Deserialize;
use trajlab_grpo::{EstimatorConfig, PolicyParams, RewardChannel, StateDistribution, SweepPoint};

use crate::commands::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub policy: PolicyParams,
    pub channel: RewardChannel,
    #[serde(default)]
    pub states: Option<StateDistribution>,
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub sweep: Vec<SweepPoint>,
}

impl Scenario {
    /// The seed must be explicit somewhere: the --seed flag wins over
    /// estimator.seed in the file; having neither is a usage error.
    pub fn load(path: &Path, seed_flag: Option<u64>) -> Result<Scenario, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Scenario::from_toml(&text, seed_flag)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    fn from_toml(text: &str, seed_flag: Option<u64>) -> Result<Scenario, String> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        if let Some(seed) = seed_flag {
            let seed = i64::try_from(seed)
                .map_err(|_| format!("--seed {seed} exceeds the TOML integer range"))?;
            match doc
                .entry("estimator")
                .or_insert_with(|| toml::Table::new().into())
            {
                toml::Value::Table(estimator) => {
                    estimator.insert("seed".into(), seed.into());
                }
                other => return Err(format!("estimator must be a table, got {other}")),
            }
        }
        let has_seed = doc
            .get("estimator")
            .and_then(|v| v.get("seed"))
            .is_some();
        if !has_seed {
            return Err("no seed: pass --seed or set estimator.seed".into());
        }
        toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use trajlab_grpo::AdvantageMode;

    const MINIMAL: &str = r#"
policy = [0.0, 0.0]

[channel]
base = [0.0, 1.0]

[estimator]
advantage_mode = { mode = "group_normalized" }
samples_outer = 200
samples_inner = 100
"#;

    #[test]
    fn seed_is_mandatory() {
        let err = Scenario::from_toml(MINIMAL, None).unwrap_err();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn seed_flag_fills_the_gap_and_beats_the_file() {
        let sc = Scenario::from_toml(MINIMAL, Some(9)).unwrap();
        assert_eq!(sc.estimator.seed, 9);

        let with_seed = format!("{MINIMAL}seed = 4\n");
        let sc = Scenario::from_toml(&with_seed, None).unwrap();
        assert_eq!(sc.estimator.seed, 4);
        let sc = Scenario::from_toml(&with_seed, Some(9)).unwrap();
        assert_eq!(sc.estimator.seed, 9);
    }

    #[test]
    fn full_scenario_round_trips_every_section() {
        let text = r#"
policy = [0.1, -0.2, 0.3]

[channel]
base = [0.0, 0.5, 1.0]
noise = { kind = "gaussian", sigma = 0.25 }
horizon = 4
scaling = "sqrt"

[estimator]
beta = 0.1
ref_logits = [0.0, 0.0, 0.0]
advantage_mode = { mode = "fixed_affine", b = 0.5, c = 1.0 }
samples_outer = 1000
samples_inner = 200
seed = 11

[[sweep]]
sigma = 0.0
horizon = 1

[[sweep]]
sigma = 2.0
horizon = 4
"#;
        let sc = Scenario::from_toml(text, None).unwrap();
        assert_eq!(sc.policy.len(), 3);
        assert_eq!(sc.channel.horizon, 4);
        assert_eq!(
            sc.estimator.advantage_mode,
            AdvantageMode::FixedAffine { b: 0.5, c: 1.0 }
        );
        assert_eq!(sc.sweep.len(), 2);
        assert_eq!(sc.sweep[1].horizon, 4);
        assert!(sc.states.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}seed = 1\n\n[extra]\nx = 1\n");
        let err = Scenario::from_toml(&text, None).unwrap_err();
        assert!(err.contains("extra"), "{err}");
    }
}
