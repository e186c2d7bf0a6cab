//! Reward channels: a deterministic per-action base plus zero-mean
//! trajectory noise whose scale grows with the horizon.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::GrpoError;

/// Trajectory noise. Every kind is zero-mean by construction so the
/// per-action conditional mean reward stays the base value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    Gaussian { sigma: f64 },
    /// amplitude * (X - p) with X ~ Bernoulli(p).
    Bernoulli { p: f64, amplitude: f64 },
}

/// How the horizon H inflates the noise scale. Sqrt models compounded
/// per-step stochasticity; the rule is configurable because nothing pins
/// it down quantitatively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonScaling {
    #[default]
    Sqrt,
    Linear,
    Constant,
}

impl HorizonScaling {
    pub fn factor(self, horizon: u32) -> f64 {
        match self {
            HorizonScaling::Sqrt => (horizon as f64).sqrt(),
            HorizonScaling::Linear => horizon as f64,
            HorizonScaling::Constant => 1.0,
        }
    }
}

fn default_horizon() -> u32 {
    1
}

/// Reward distribution for one state: `base[a]` is the deterministic
/// component, noise rides on top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardChannel {
    /// Mean reward per action index; length must match the policy.
    pub base: Vec<f64>,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default = "default_horizon")]
    pub horizon: u32,
    #[serde(default)]
    pub scaling: HorizonScaling,
}

impl RewardChannel {
    pub fn deterministic(base: Vec<f64>) -> Self {
        RewardChannel {
            base,
            noise: NoiseKind::None,
            horizon: 1,
            scaling: HorizonScaling::default(),
        }
    }

    pub fn validate(&self, n_actions: usize) -> Result<(), GrpoError> {
        if self.base.len() != n_actions {
            return Err(GrpoError::ConfigInvalid(format!(
                "channel has {} base rewards for {} actions",
                self.base.len(),
                n_actions
            )));
        }
        if self.base.iter().any(|b| !b.is_finite()) {
            return Err(GrpoError::ConfigInvalid("non-finite base reward".into()));
        }
        if self.horizon < 1 {
            return Err(GrpoError::ConfigInvalid("horizon must be >= 1".into()));
        }
        match self.noise {
            NoiseKind::None => Ok(()),
            NoiseKind::Gaussian { sigma } => {
                if sigma < 0.0 || !sigma.is_finite() {
                    Err(GrpoError::ConfigInvalid(format!("bad sigma {sigma}")))
                } else {
                    Ok(())
                }
            }
            NoiseKind::Bernoulli { p, amplitude } => {
                if !(0.0..=1.0).contains(&p) {
                    Err(GrpoError::ConfigInvalid(format!("bad p {p}")))
                } else if !amplitude.is_finite() {
                    Err(GrpoError::ConfigInvalid("non-finite amplitude".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// The horizon-scaled noise parameter: sigma for Gaussian, amplitude
    /// for Bernoulli, zero when deterministic.
    pub fn effective_scale(&self) -> f64 {
        let f = self.scaling.factor(self.horizon);
        match self.noise {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian { sigma } => sigma * f,
            NoiseKind::Bernoulli { amplitude, .. } => amplitude * f,
        }
    }

    /// Standard deviation of one noise draw; the quantity closed forms
    /// are written in.
    pub fn noise_std(&self) -> f64 {
        match self.noise {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian { .. } => self.effective_scale(),
            NoiseKind::Bernoulli { p, .. } => self.effective_scale() * (p * (1.0 - p)).sqrt(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.noise, NoiseKind::None) || self.noise_std() == 0.0
    }

    /// One zero-mean noise draw. Deterministic channels consume no
    /// randomness.
    pub fn sample_noise<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.noise {
            NoiseKind::None => 0.0,
            NoiseKind::Gaussian { .. } => {
                let scale = self.effective_scale();
                if scale == 0.0 {
                    return 0.0;
                }
                // Parameters were validated; scale is finite and positive.
                Normal::new(0.0, scale).unwrap().sample(rng)
            }
            NoiseKind::Bernoulli { p, .. } => {
                let x = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
                self.effective_scale() * (x - p)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn horizon_scaling_rules() {
        assert_eq!(HorizonScaling::Sqrt.factor(4), 2.0);
        assert_eq!(HorizonScaling::Linear.factor(4), 4.0);
        assert_eq!(HorizonScaling::Constant.factor(4), 1.0);
    }

    #[test]
    fn effective_scale_default_is_sigma_root_h() {
        let ch = RewardChannel {
            base: vec![0.0, 1.0],
            noise: NoiseKind::Gaussian { sigma: 0.5 },
            horizon: 9,
            scaling: HorizonScaling::Sqrt,
        };
        assert_eq!(ch.effective_scale(), 1.5);
        assert_eq!(ch.noise_std(), 1.5);
    }

    #[test]
    fn bernoulli_noise_is_centered_with_known_std() {
        let ch = RewardChannel {
            base: vec![0.0, 0.0],
            noise: NoiseKind::Bernoulli {
                p: 0.25,
                amplitude: 2.0,
            },
            horizon: 1,
            scaling: HorizonScaling::Sqrt,
        };
        assert!((ch.noise_std() - 2.0 * (0.25f64 * 0.75).sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let x = ch.sample_noise(&mut rng);
            // Only two values are possible: amp*(1-p) and -amp*p.
            assert!(x == 2.0 * 0.75 || x == -2.0 * 0.25);
            sum += x;
            sum2 += x * x;
        }
        let mean = sum / n as f64;
        let std = (sum2 / n as f64 - mean * mean).sqrt();
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((std - ch.noise_std()).abs() < 0.01, "{std}");
    }

    #[test]
    fn deterministic_channel_draws_nothing() {
        let ch = RewardChannel::deterministic(vec![0.1, 0.9]);
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(ch.sample_noise(&mut a), 0.0);
        // The rng state is untouched.
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let mut ch = RewardChannel::deterministic(vec![0.0, 1.0]);
        assert!(ch.validate(2).is_ok());
        assert!(ch.validate(3).is_err());
        ch.noise = NoiseKind::Gaussian { sigma: -1.0 };
        assert!(ch.validate(2).is_err());
        ch.noise = NoiseKind::Bernoulli {
            p: 1.5,
            amplitude: 1.0,
        };
        assert!(ch.validate(2).is_err());
        ch.noise = NoiseKind::None;
        ch.horizon = 0;
        assert!(ch.validate(2).is_err());
    }

    #[test]
    fn channel_serde_round_trip() {
        let ch = RewardChannel {
            base: vec![0.0, 0.5, 1.0],
            noise: NoiseKind::Gaussian { sigma: 0.1 },
            horizon: 4,
            scaling: HorizonScaling::Sqrt,
        };
        let json = serde_json::to_string(&ch).unwrap();
        let back: RewardChannel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ch);
        // Defaults fill in when omitted.
        let minimal: RewardChannel = serde_json::from_str(r#"{"base": [0.0, 1.0]}"#).unwrap();
        assert_eq!(minimal.noise, NoiseKind::None);
        assert_eq!(minimal.horizon, 1);
    }
}
