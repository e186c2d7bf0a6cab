//! Softmax policies over a finite action set, their score gradients, and
//! the KL-regularized gradient estimate.

use serde::{Deserialize, Serialize};

use crate::GrpoError;

/// Logits of a softmax policy. At least two actions, all entries finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PolicyParams {
    logits: Vec<f64>,
}

impl PolicyParams {
    pub fn new(logits: Vec<f64>) -> Result<Self, GrpoError> {
        if logits.len() < 2 {
            return Err(GrpoError::BadPolicy(format!(
                "need at least 2 actions, got {}",
                logits.len()
            )));
        }
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(GrpoError::BadPolicy("non-finite logit".into()));
        }
        Ok(PolicyParams { logits })
    }

    pub fn uniform(n: usize) -> Result<Self, GrpoError> {
        PolicyParams::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Max-shifted softmax; sums to 1 up to rounding.
    pub fn probs(&self) -> Vec<f64> {
        let max = self.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = self.logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }
}

impl TryFrom<Vec<f64>> for PolicyParams {
    type Error = GrpoError;

    fn try_from(logits: Vec<f64>) -> Result<Self, GrpoError> {
        PolicyParams::new(logits)
    }
}

impl From<PolicyParams> for Vec<f64> {
    fn from(p: PolicyParams) -> Vec<f64> {
        p.logits
    }
}

/// Gradient of log softmax wrt the logits: component j is
/// 1{j = action} - softmax(logits)_j. Components sum to zero.
pub fn score_gradient(policy: &PolicyParams, action: usize) -> Vec<f64> {
    let mut grad = policy.probs();
    for g in grad.iter_mut() {
        *g = -*g;
    }
    grad[action] += 1.0;
    grad
}

/// The estimator direction for one sampled action:
/// [advantage + beta * (pi_ref(a)/pi_theta(a) - 1)] * score_gradient.
pub fn gradient_estimate(
    advantage: f64,
    policy: &PolicyParams,
    reference: &PolicyParams,
    action: usize,
    beta: f64,
) -> Result<Vec<f64>, GrpoError> {
    let scalar = advantage + beta * kl_ratio_term(policy, reference, action)?;
    let mut grad = score_gradient(policy, action);
    for g in grad.iter_mut() {
        *g *= scalar;
    }
    Ok(grad)
}

/// pi_ref(a)/pi_theta(a) - 1, the scalar the KL coefficient multiplies.
pub fn kl_ratio_term(
    policy: &PolicyParams,
    reference: &PolicyParams,
    action: usize,
) -> Result<f64, GrpoError> {
    let p = policy.probs()[action];
    if p <= 0.0 {
        return Err(GrpoError::DegeneratePolicy { action });
    }
    Ok(reference.probs()[action] / p - 1.0)
}
