//! Nested Monte Carlo estimation of the gradient-noise decomposition
//! Sigma_total = Sigma_tau + Sigma_a + Sigma_s.
//!
//! Sampling plan: states are stratified (each gets its share of
//! `samples_outer` cells by largest remainder, at least 2), each cell
//! samples its action (or action group) from the policy once, then
//! `samples_inner` noise draws estimate the conditional mean and variance
//! of the gradient estimate given (state, action). Because the estimate
//! is always scalar * score_gradient(a) with the action fixed inside a
//! cell, a cell stores exact sufficient statistics (scalar mean and
//! variance) instead of vectors.
//!
//! Bias control: the spread of cell means overstates the action-level
//! variance by the leftover inner noise, so the one-way ANOVA corrections
//! are subtracted where the terms are assembled. Sigma_total comes from
//! an independent pooled pass, which makes the additivity check a genuine
//! cross-validation rather than an arithmetic identity.
//!
//! Determinism: every cell, pooled draw, and bootstrap resample seeds its
//! own ChaCha substream from (seed, namespaced index), so reports are
//! byte-identical regardless of thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advantage::{first_advantage, AdvantageMode, DEFAULT_EPSILON};
use crate::channel::RewardChannel;
use crate::policy::{kl_ratio_term, score_gradient, PolicyParams};
use crate::GrpoError;

const CELL_STREAM: u64 = 1 << 40;
const POOLED_STREAM: u64 = 2 << 40;
const BOOT_STREAM: u64 = 3 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedState {
    pub probability: f64,
    pub channel: RewardChannel,
}

/// The state layer: a finite mixture of reward channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    pub states: Vec<WeightedState>,
}

impl StateDistribution {
    pub fn single(channel: RewardChannel) -> Self {
        StateDistribution {
            states: vec![WeightedState {
                probability: 1.0,
                channel,
            }],
        }
    }

    pub fn validate(&self, n_actions: usize) -> Result<(), GrpoError> {
        if self.states.is_empty() {
            return Err(GrpoError::ConfigInvalid("no states".into()));
        }
        let mut total = 0.0;
        for s in &self.states {
            if !(s.probability > 0.0 && s.probability.is_finite()) {
                return Err(GrpoError::ConfigInvalid(format!(
                    "state probability {} must be positive",
                    s.probability
                )));
            }
            total += s.probability;
            s.channel.validate(n_actions)?;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(GrpoError::ConfigInvalid(format!(
                "state probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }
}

fn default_group_size() -> usize {
    4
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_bootstrap() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// KL regularization coefficient.
    #[serde(default)]
    pub beta: f64,
    /// Reference policy; None means the policy itself (KL term zero).
    #[serde(default)]
    pub ref_logits: Option<PolicyParams>,
    /// Group size G for GroupNormalized advantages.
    #[serde(default = "default_group_size")]
    pub group_size: usize,
    pub advantage_mode: AdvantageMode,
    /// Cells: one sampled action with its own inner noise loop each.
    pub samples_outer: usize,
    pub samples_inner: usize,
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_resamples: usize,
}

impl EstimatorConfig {
    fn validate(&self, n_states: usize, n_actions: usize) -> Result<(), GrpoError> {
        if self.samples_outer < 100 || self.samples_inner < 100 {
            return Err(GrpoError::ConfigInvalid(
                "samples_outer and samples_inner must both be at least 100".into(),
            ));
        }
        if self.samples_outer < 2 * n_states {
            return Err(GrpoError::ConfigInvalid(format!(
                "{} outer samples cannot cover {} states twice",
                self.samples_outer, n_states
            )));
        }
        if self.bootstrap_resamples < 2 {
            return Err(GrpoError::ConfigInvalid(
                "need at least 2 bootstrap resamples".into(),
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(GrpoError::ConfigInvalid(format!("bad beta {}", self.beta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(GrpoError::ConfigInvalid(format!(
                "bad epsilon {}",
                self.epsilon
            )));
        }
        match self.advantage_mode {
            AdvantageMode::FixedAffine { b, c } => {
                if c == 0.0 || !b.is_finite() || !c.is_finite() {
                    return Err(GrpoError::ConfigInvalid(format!(
                        "bad affine advantage (b={b}, c={c})"
                    )));
                }
            }
            AdvantageMode::GroupNormalized => {
                if self.group_size < 2 {
                    return Err(GrpoError::ConfigInvalid(
                        "group_size must be at least 2".into(),
                    ));
                }
            }
        }
        if let Some(reference) = &self.ref_logits {
            if reference.len() != n_actions {
                return Err(GrpoError::ConfigInvalid(format!(
                    "reference policy has {} actions, policy has {n_actions}",
                    reference.len()
                )));
            }
        }
        Ok(())
    }
}

/// Bootstrap standard errors (sample std over seeded resamples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub sigma_tau: f64,
    pub sigma_a: f64,
    pub sigma_s: f64,
    pub sigma_total: f64,
    /// SE of sigma_tau + sigma_a + sigma_s, from a joint resample, so
    /// covariances between the three terms are included.
    pub decomposition_sum: f64,
    /// SE of the residual; the pooled pass is independent of the cells,
    /// so this is sqrt(decomposition_sum^2 + sigma_total^2).
    pub residual: f64,
    pub ratio: f64,
    pub snr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    /// Trace of the covariance of the estimate, from the pooled pass.
    pub sigma_total: f64,
    /// E_{s,a}[tr Var_{noise}(g)].
    pub sigma_tau: f64,
    /// E_s[tr Var_{a}(E_noise[g])], inner-noise bias subtracted.
    pub sigma_a: f64,
    /// tr Var_s(E_{a,noise}[g]), within-state estimation bias subtracted.
    pub sigma_s: f64,
    /// sigma_total - (sigma_tau + sigma_a + sigma_s); the law of total
    /// variance says zero up to Monte Carlo error.
    pub residual: f64,
    /// ||E[g]||^2 / sigma_total, the plug-in numerator debiased by
    /// sigma_total / n_pooled.
    pub snr: f64,
    /// sigma_tau / sigma_a, NaN when sigma_a is not positive.
    pub ratio: f64,
    pub standard_errors: StandardErrors,
}

/// Exact sufficient statistics for one cell: the estimate inside a cell
/// is scalar * score_gradient(action), so the scalar's mean and unbiased
/// variance over the inner draws carry everything.
#[derive(Debug, Clone, Copy)]
struct Cell {
    state: u32,
    action: u32,
    mean: f64,
    var: f64,
}

#[derive(Debug, Clone, Copy)]
struct PooledDraw {
    action: u32,
    scalar: f64,
}

/// Per-action tables shared by every sampling task.
struct Ctx {
    states: Vec<WeightedState>,
    probs: Vec<f64>,
    grads: Vec<Vec<f64>>,
    gnorm2: Vec<f64>,
    /// beta * (pi_ref/pi - 1) per action; NaN marks unsampleable actions.
    beta_kl: Vec<f64>,
    mode: AdvantageMode,
    group_size: usize,
    epsilon: f64,
    n_inner: usize,
    seed: u64,
}

impl Ctx {
    fn new(
        states: StateDistribution,
        policy: &PolicyParams,
        cfg: &EstimatorConfig,
    ) -> Result<Ctx, GrpoError> {
        let n = policy.len();
        let probs = policy.probs();
        let grads: Vec<Vec<f64>> = (0..n).map(|a| score_gradient(policy, a)).collect();
        let gnorm2: Vec<f64> = grads
            .iter()
            .map(|g| g.iter().map(|x| x * x).sum())
            .collect();
        let reference = cfg.ref_logits.as_ref().unwrap_or(policy);
        let beta_kl: Vec<f64> = (0..n)
            .map(|a| {
                if cfg.beta == 0.0 {
                    0.0
                } else if probs[a] > 0.0 {
                    cfg.beta * kl_ratio_term(policy, reference, a).expect("prob checked positive")
                } else {
                    // Zero-probability actions are never sampled.
                    f64::NAN
                }
            })
            .collect();
        Ok(Ctx {
            states: states.states,
            probs,
            grads,
            gnorm2,
            beta_kl,
            mode: cfg.advantage_mode,
            group_size: cfg.group_size,
            epsilon: cfg.epsilon,
            n_inner: cfg.samples_inner,
            seed: cfg.seed,
        })
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn sample_action<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }

    fn sample_state<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, s) in self.states.iter().enumerate() {
            acc += s.probability;
            if u < acc {
                return i;
            }
        }
        self.states.len() - 1
    }

    /// Draw the action layer of one cell: a single action, or the whole
    /// group under GroupNormalized.
    fn draw_actions<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let count = match self.mode {
            AdvantageMode::FixedAffine { .. } => 1,
            AdvantageMode::GroupNormalized => self.group_size,
        };
        (0..count).map(|_| self.sample_action(rng)).collect()
    }

    /// One noise resample of the advantage-plus-KL scalar, conditioned on
    /// the state and the drawn actions. The estimate is this scalar times
    /// score_gradient(actions[0]).
    fn draw_scalar<R: Rng>(
        &self,
        rng: &mut R,
        state: usize,
        actions: &[usize],
        rewards: &mut Vec<f64>,
    ) -> f64 {
        let channel = &self.states[state].channel;
        match self.mode {
            AdvantageMode::FixedAffine { b, c } => {
                let a = actions[0];
                let r = channel.base[a] + channel.sample_noise(rng);
                (r - b) / c + self.beta_kl[a]
            }
            AdvantageMode::GroupNormalized => {
                rewards.clear();
                for &a in actions {
                    rewards.push(channel.base[a] + channel.sample_noise(rng));
                }
                let adv = first_advantage(rewards, self.epsilon)
                    .expect("group size validated >= 2");
                adv + self.beta_kl[actions[0]]
            }
        }
    }

    fn run_cell(&self, index: usize, state: usize) -> Cell {
        let mut rng = self.rng(CELL_STREAM + index as u64);
        let actions = self.draw_actions(&mut rng);
        let mut rewards = Vec::with_capacity(self.group_size);
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for j in 0..self.n_inner {
            let scalar = self.draw_scalar(&mut rng, state, &actions, &mut rewards);
            let delta = scalar - mean;
            mean += delta / (j + 1) as f64;
            m2 += delta * (scalar - mean);
        }
        Cell {
            state: state as u32,
            action: actions[0] as u32,
            mean,
            var: m2 / (self.n_inner - 1) as f64,
        }
    }

    fn run_pooled(&self, index: usize) -> PooledDraw {
        let mut rng = self.rng(POOLED_STREAM + index as u64);
        let state = self.sample_state(&mut rng);
        let actions = self.draw_actions(&mut rng);
        let mut rewards = Vec::with_capacity(self.group_size);
        let scalar = self.draw_scalar(&mut rng, state, &actions, &mut rewards);
        PooledDraw {
            action: actions[0] as u32,
            scalar,
        }
    }
}

/// Largest-remainder allocation of `n` cells over state probabilities,
/// forcing at least `min_per` per state. Deterministic: remainder ties
/// break toward the lower index.
fn allocate(n: usize, probs: &[f64], min_per: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = probs.iter().map(|p| (p * n as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&i, &j| {
        let ri = probs[i] * n as f64 - counts[i] as f64;
        let rj = probs[j] * n as f64 - counts[j] as f64;
        rj.partial_cmp(&ri).unwrap().then(i.cmp(&j))
    });
    for k in 0..(n - assigned) {
        counts[order[k % order.len()]] += 1;
    }
    while let Some(deficit) = counts.iter().position(|&c| c < min_per) {
        let donor = counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > min_per)
            .max_by_key(|&(_, &c)| c)
            .map(|(i, _)| i)
            .expect("total guarantees a donor");
        counts[donor] -= 1;
        counts[deficit] += 1;
    }
    counts
}

/// Aggregates over one state's cells, sufficient to assemble every term.
struct StateAgg {
    n: f64,
    /// sum over cells of var * ||grad(a)||^2: total conditional variance.
    sv: f64,
    /// sum over cells of mean^2 * ||grad(a)||^2: total squared mean norm.
    sm2: f64,
    /// sum of cell means, bucketed by action (reconstructs vector sums).
    svec: Vec<f64>,
}

impl StateAgg {
    fn new(n_actions: usize) -> StateAgg {
        StateAgg {
            n: 0.0,
            sv: 0.0,
            sm2: 0.0,
            svec: vec![0.0; n_actions],
        }
    }

    fn add(&mut self, cell: &Cell, gnorm2: &[f64]) {
        let a = cell.action as usize;
        self.n += 1.0;
        self.sv += cell.var * gnorm2[a];
        self.sm2 += cell.mean * cell.mean * gnorm2[a];
        self.svec[a] += cell.mean;
    }
}

struct Decomposition {
    sigma_tau: f64,
    sigma_a: f64,
    sigma_s: f64,
}

fn assemble(aggs: &[StateAgg], ctx: &Ctx) -> Decomposition {
    let dim = ctx.grads[0].len();
    let mut sigma_tau = 0.0;
    let mut sigma_a = 0.0;
    // For sigma_s: per-state mean vectors and their estimation variances.
    let mut e_norm2 = 0.0; // sum_k p_k (||mu_k||^2 - c_k)
    let mut mixed = vec![0.0; dim]; // sum_k p_k mu_k
    let mut mixed_c = 0.0; // sum_k p_k^2 c_k
    for (agg, state) in aggs.iter().zip(&ctx.states) {
        let p = state.probability;
        let n = agg.n;
        let mean_inner_var = agg.sv / n;
        sigma_tau += p * mean_inner_var;

        let mut sum_vec = vec![0.0; dim];
        for (a, s) in agg.svec.iter().enumerate() {
            if *s != 0.0 {
                for (dst, g) in sum_vec.iter_mut().zip(&ctx.grads[a]) {
                    *dst += s * g;
                }
            }
        }
        let sum_norm2: f64 = sum_vec.iter().map(|x| x * x).sum();
        // Sample variance (trace) of the cell means within this state.
        let tr_sv = (agg.sm2 - sum_norm2 / n) / (n - 1.0);
        // The cell means still carry inner noise of var/n_inner each.
        sigma_a += p * (tr_sv - mean_inner_var / ctx.n_inner as f64);

        let c_k = tr_sv / n; // tr Var of the state mean estimate
        // Build mu_k once and reuse it on both sides of the sigma_s
        // difference, so a single state cancels to exactly zero.
        let mu: Vec<f64> = sum_vec.iter().map(|v| v / n).collect();
        let mu_norm2: f64 = mu.iter().map(|x| x * x).sum();
        e_norm2 += p * (mu_norm2 - c_k);
        for (dst, v) in mixed.iter_mut().zip(&mu) {
            *dst += p * v;
        }
        mixed_c += p * p * c_k;
    }
    let mixed_norm2: f64 = mixed.iter().map(|x| x * x).sum();
    let sigma_s = e_norm2 - (mixed_norm2 - mixed_c);
    Decomposition {
        sigma_tau,
        sigma_a,
        sigma_s,
    }
}

struct PooledStats {
    total: f64,
    snr: f64,
}

fn pooled_stats(
    draws: impl Iterator<Item = PooledDraw>,
    n: usize,
    ctx: &Ctx,
) -> PooledStats {
    let dim = ctx.grads[0].len();
    let mut by_action = vec![0.0; ctx.probs.len()];
    let mut sm2 = 0.0;
    for d in draws {
        let a = d.action as usize;
        by_action[a] += d.scalar;
        sm2 += d.scalar * d.scalar * ctx.gnorm2[a];
    }
    let mut sum_vec = vec![0.0; dim];
    for (a, s) in by_action.iter().enumerate() {
        if *s != 0.0 {
            for (dst, g) in sum_vec.iter_mut().zip(&ctx.grads[a]) {
                *dst += s * g;
            }
        }
    }
    let nf = n as f64;
    let sum_norm2: f64 = sum_vec.iter().map(|x| x * x).sum();
    let total = (sm2 - sum_norm2 / nf) / (nf - 1.0);
    let mean_norm2 = sum_norm2 / (nf * nf);
    let snr = if total > 0.0 {
        (mean_norm2 - total / nf) / total
    } else {
        f64::NAN
    };
    PooledStats { total, snr }
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Estimate the decomposition for one reward channel (or an explicit
/// state mixture, in which case `channel` is ignored).
pub fn simulate_variance(
    channel: &RewardChannel,
    policy: &PolicyParams,
    cfg: &EstimatorConfig,
    states: Option<&StateDistribution>,
) -> Result<VarianceReport, GrpoError> {
    let dist = states
        .cloned()
        .unwrap_or_else(|| StateDistribution::single(channel.clone()));
    dist.validate(policy.len())?;
    cfg.validate(dist.states.len(), policy.len())?;

    let ctx = Ctx::new(dist, policy, cfg)?;
    let n_states = ctx.states.len();
    let n_actions = ctx.probs.len();
    let state_probs: Vec<f64> = ctx.states.iter().map(|s| s.probability).collect();
    let counts = allocate(cfg.samples_outer, &state_probs, 2);
    let offsets: Vec<usize> = counts
        .iter()
        .scan(0, |acc, &c| {
            let o = *acc;
            *acc += c;
            Some(o)
        })
        .collect();
    let state_of = |cell: usize| -> usize {
        // Cells are laid out per state in contiguous blocks.
        match offsets.binary_search(&cell) {
            Ok(k) => k,
            Err(k) => k - 1,
        }
    };

    let cells: Vec<Cell> = (0..cfg.samples_outer)
        .into_par_iter()
        .map(|i| ctx.run_cell(i, state_of(i)))
        .collect();
    let pooled: Vec<PooledDraw> = (0..cfg.samples_outer)
        .into_par_iter()
        .map(|i| ctx.run_pooled(i))
        .collect();

    // Point estimates.
    let mut aggs: Vec<StateAgg> = (0..n_states).map(|_| StateAgg::new(n_actions)).collect();
    for cell in &cells {
        aggs[cell.state as usize].add(cell, &ctx.gnorm2);
    }
    let point = assemble(&aggs, &ctx);
    let pool = pooled_stats(pooled.iter().copied(), pooled.len(), &ctx);
    let ratio = if point.sigma_a > 0.0 {
        point.sigma_tau / point.sigma_a
    } else {
        f64::NAN
    };

    // Joint bootstrap: resample cells within each state (keeping the
    // stratification) and the pooled draws, recompute everything.
    struct BootRow {
        tau: f64,
        a: f64,
        s: f64,
        sum: f64,
        ratio: Option<f64>,
        total: f64,
        snr: f64,
    }
    let rows: Vec<BootRow> = (0..cfg.bootstrap_resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ctx.rng(BOOT_STREAM + b as u64);
            let mut aggs: Vec<StateAgg> =
                (0..n_states).map(|_| StateAgg::new(n_actions)).collect();
            for k in 0..n_states {
                let (off, cnt) = (offsets[k], counts[k]);
                for _ in 0..cnt {
                    let cell = &cells[off + rng.random_range(0..cnt)];
                    aggs[k].add(cell, &ctx.gnorm2);
                }
            }
            let d = assemble(&aggs, &ctx);
            let n_pool = pooled.len();
            let draws = (0..n_pool).map(|_| pooled[rng.random_range(0..n_pool)]);
            let p = pooled_stats(draws, n_pool, &ctx);
            BootRow {
                tau: d.sigma_tau,
                a: d.sigma_a,
                s: d.sigma_s,
                sum: d.sigma_tau + d.sigma_a + d.sigma_s,
                ratio: (d.sigma_a > 0.0).then(|| d.sigma_tau / d.sigma_a),
                total: p.total,
                snr: p.snr,
            }
        })
        .collect();

    let col = |f: fn(&BootRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let se_tau = sample_std(&col(|r| r.tau));
    let se_a = sample_std(&col(|r| r.a));
    let se_s = sample_std(&col(|r| r.s));
    let se_sum = sample_std(&col(|r| r.sum));
    let se_total = sample_std(&col(|r| r.total));
    let se_snr = sample_std(&col(|r| r.snr));
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let se_ratio = if ratios.len() >= 2 {
        sample_std(&ratios)
    } else {
        f64::NAN
    };

    Ok(VarianceReport {
        sigma_total: pool.total,
        sigma_tau: point.sigma_tau,
        sigma_a: point.sigma_a,
        sigma_s: point.sigma_s,
        residual: pool.total - (point.sigma_tau + point.sigma_a + point.sigma_s),
        snr: pool.snr,
        ratio,
        standard_errors: StandardErrors {
            sigma_tau: se_tau,
            sigma_a: se_a,
            sigma_s: se_s,
            sigma_total: se_total,
            decomposition_sum: se_sum,
            residual: (se_sum * se_sum + se_total * se_total).sqrt(),
            ratio: se_ratio,
            snr: se_snr,
        },
    })
}
