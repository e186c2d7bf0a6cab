//! Exact moments of the estimator under FixedAffine advantages. With the
//! advantage an affine map of the reward and the noise additive, every
//! conditional expectation is a finite sum over actions, so the whole
//! decomposition has a closed form. The simulator is tested against this.

use crate::policy::{kl_ratio_term, score_gradient, PolicyParams};
use crate::simulate::StateDistribution;
use crate::GrpoError;

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub mean_gradient: Vec<f64>,
    pub sigma_tau: f64,
    pub sigma_a: f64,
    pub sigma_s: f64,
    /// Sum of the three terms; the law of total variance is an identity
    /// here, not an estimate.
    pub sigma_total: f64,
    pub snr: f64,
}

pub fn closed_form(
    states: &StateDistribution,
    policy: &PolicyParams,
    beta: f64,
    reference: Option<&PolicyParams>,
    b: f64,
    c: f64,
) -> Result<ClosedForm, GrpoError> {
    let n = policy.len();
    states.validate(n)?;
    if c == 0.0 || !b.is_finite() || !c.is_finite() {
        return Err(GrpoError::ConfigInvalid(format!(
            "bad affine advantage (b={b}, c={c})"
        )));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(GrpoError::ConfigInvalid(format!("bad beta {beta}")));
    }
    let reference = reference.unwrap_or(policy);
    if reference.len() != n {
        return Err(GrpoError::ConfigInvalid(format!(
            "reference policy has {} actions, policy has {n}",
            reference.len()
        )));
    }

    let probs = policy.probs();
    let grads: Vec<Vec<f64>> = (0..n).map(|a| score_gradient(policy, a)).collect();
    let gnorm2: Vec<f64> = grads
        .iter()
        .map(|g| g.iter().map(|x| x * x).sum())
        .collect();
    let beta_kl: Vec<f64> = (0..n)
        .map(|a| {
            if beta == 0.0 || probs[a] == 0.0 {
                0.0
            } else {
                beta * kl_ratio_term(policy, reference, a).expect("prob checked positive")
            }
        })
        .collect();

    // E_a[||grad||^2] under the policy, the factor multiplying the noise.
    let grad_weight: f64 = (0..n).map(|a| probs[a] * gnorm2[a]).collect::<Vec<_>>().iter().sum();

    let mut sigma_tau = 0.0;
    let mut sigma_a = 0.0;
    let mut e_mu_norm2 = 0.0;
    let mut mean_gradient = vec![0.0; n];
    for state in &states.states {
        let p = state.probability;
        let noise_var = {
            let s = state.channel.noise_std();
            s * s
        };
        sigma_tau += p * grad_weight * noise_var / (c * c);

        let mut mu = vec![0.0; n];
        let mut second = 0.0;
        for a in 0..n {
            if probs[a] == 0.0 {
                continue;
            }
            let scalar = (state.channel.base[a] - b) / c + beta_kl[a];
            second += probs[a] * scalar * scalar * gnorm2[a];
            for (dst, g) in mu.iter_mut().zip(&grads[a]) {
                *dst += probs[a] * scalar * g;
            }
        }
        let mu_norm2: f64 = mu.iter().map(|x| x * x).sum();
        sigma_a += p * (second - mu_norm2);
        e_mu_norm2 += p * mu_norm2;
        for (dst, v) in mean_gradient.iter_mut().zip(&mu) {
            *dst += p * v;
        }
    }
    let mean_norm2: f64 = mean_gradient.iter().map(|x| x * x).sum();
    let sigma_s = e_mu_norm2 - mean_norm2;
    let sigma_total = sigma_tau + sigma_a + sigma_s;
    let snr = if sigma_total > 0.0 {
        mean_norm2 / sigma_total
    } else {
        f64::NAN
    };
    Ok(ClosedForm {
        mean_gradient,
        sigma_tau,
        sigma_a,
        sigma_s,
        sigma_total,
        snr,
    })
}
