//! GRPO math and a seeded Monte Carlo lab for its gradient noise.
//!
//! The pieces: group-relative advantage normalization, softmax score
//! gradients, the KL-regularized policy gradient estimate, and a
//! simulator that decomposes the estimator's variance into trajectory,
//! action, and state layers (checked against closed forms where they
//! exist). The sweep module measures how reward noise and horizon move
//! the trajectory/action variance ratio, which is the structural
//! difference between plan-like and reflection-like reward channels.

pub mod advantage;
pub mod channel;
pub mod closed_form;
pub mod policy;
pub mod report;
pub mod simulate;
pub mod sweep;

pub use advantage::{first_advantage, group_advantages, AdvantageMode, DEFAULT_EPSILON};
pub use channel::{HorizonScaling, NoiseKind, RewardChannel};
pub use closed_form::{closed_form, ClosedForm};
pub use policy::{gradient_estimate, kl_ratio_term, score_gradient, PolicyParams};
pub use simulate::{
    simulate_variance, EstimatorConfig, StandardErrors, StateDistribution, VarianceReport,
    WeightedState,
};
pub use sweep::{asymmetry_sweep, SweepPoint, SweepRow};

#[derive(Debug, thiserror::Error)]
pub enum GrpoError {
    #[error("group of {got} cannot be normalized; need at least 2 members")]
    GroupTooSmall { got: usize },
    #[error("policy puts no probability on action {action}")]
    DegeneratePolicy { action: usize },
    #[error("bad policy: {0}")]
    BadPolicy(String),
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
}
