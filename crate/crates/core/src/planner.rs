//! Span-bound planner: uniform sampling, reward perturbation and a
//! discounted solve whose horizon is tuned to a known bias-span bound.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{argmax_first, DeterministicPolicy, Kernel};
use crate::sampling::{collect_uniform, top_up, GenerativeModel, SampleStore};

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub eps: f64,
    /// Upper bound on the optimal bias span.
    pub h_bar: f64,
    pub delta: f64,
    /// Leading constant of the per-pair sample budget.
    pub c2: f64,
    /// Width of the uniform reward perturbation; `eps / 72` when `None`.
    pub perturb_scale: Option<f64>,
}

impl PlannerConfig {
    pub fn new(eps: f64, h_bar: f64, delta: f64) -> Self {
        PlannerConfig { eps, h_bar, delta, c2: 1.0, perturb_scale: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidParams(format!("eps = {} must be in (0, 1]", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParams(format!("delta = {} must be in (0, 1)", self.delta)));
        }
        if !(self.h_bar >= 0.0 && self.h_bar.is_finite()) {
            return Err(Error::InvalidParams(format!("span bound {} must be finite and >= 0", self.h_bar)));
        }
        if !(self.c2 > 0.0) {
            return Err(Error::InvalidParams(format!("C2 = {} must be positive", self.c2)));
        }
        Ok(())
    }
}

/// Discount factor `1 - eps / (12 h_bar)`, clamped at 0 for tiny spans.
pub fn discount_factor(eps: f64, h_bar: f64) -> f64 {
    if h_bar <= 0.0 {
        return 0.0;
    }
    (1.0 - eps / (12.0 * h_bar)).max(0.0)
}

/// Per-pair sample budget `ceil(144 C2 h_bar / eps^2 * log(12 SA / (delta eps)))`.
pub fn sample_budget(
    eps: f64,
    h_bar: f64,
    delta: f64,
    c2: f64,
    num_states: usize,
    num_actions: usize,
) -> u64 {
    let sa = (num_states * num_actions) as f64;
    let n = 144.0 * c2 * h_bar / (eps * eps) * (12.0 * sa / (delta * eps)).ln();
    n.max(0.0).ceil() as u64
}

/// Adds independent `U[0, scale]` noise to every mean reward.
pub fn perturb_rewards(rewards: &[f64], scale: f64, seed: u64) -> Vec<f64> {
    if scale <= 0.0 {
        return rewards.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // keep clear of the per-pair sampling streams, which use small stream ids
    rng.set_stream(u64::MAX);
    rewards.iter().map(|r| r + rng.random::<f64>() * scale).collect()
}

/// Optimal discounted values and a greedy policy.
#[derive(Clone, Debug)]
pub struct DiscountedSolution {
    pub policy: DeterministicPolicy,
    pub values: Vec<f64>,
    pub improvement_steps: usize,
}

fn q_value(kernel: &Kernel, rewards: &[f64], gamma: f64, s: usize, a: usize, v: &[f64]) -> f64 {
    rewards[s * kernel.num_actions() + a] + gamma * kernel.expect(s, a, v)
}

fn evaluate(kernel: &Kernel, rewards: &[f64], gamma: f64, policy: &[usize]) -> Result<Vec<f64>> {
    let n = kernel.num_states();
    let n_a = kernel.num_actions();
    let a = DMatrix::from_fn(n, n, |s, t| {
        let id = if s == t { 1.0 } else { 0.0 };
        id - gamma * kernel.prob(s, policy[s], t)
    });
    let r = DVector::from_fn(n, |s, _| rewards[s * n_a + policy[s]]);
    let x = a.lu().solve(&r).ok_or(Error::SingularSystem)?;
    Ok(x.as_slice().to_vec())
}

/// Solves the discounted problem: a short value-iteration warm start, then
/// Howard policy iteration with exact evaluations. Actions change only on
/// strict improvement; ties go to the smallest index.
pub fn solve_discounted(kernel: &Kernel, rewards: &[f64], gamma: f64) -> Result<DiscountedSolution> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidParams(format!("discount {gamma} must be in [0, 1)")));
    }
    let n = kernel.num_states();
    let n_a = kernel.num_actions();
    let mut v = vec![0.0; n];
    let mut q = vec![0.0; n_a];
    let warm = 50.min((1.0 / (1.0 - gamma)).ceil() as usize);
    for _ in 0..warm {
        v = (0..n)
            .map(|s| {
                (0..n_a).map(|a| q_value(kernel, rewards, gamma, s, a, &v)).fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
    }
    let mut policy: Vec<usize> = (0..n)
        .map(|s| {
            for (a, slot) in q.iter_mut().enumerate() {
                *slot = q_value(kernel, rewards, gamma, s, a, &v);
            }
            argmax_first(&q, 0.0)
        })
        .collect();
    for step in 0..(10 * n * n_a + 100) {
        let values = evaluate(kernel, rewards, gamma, &policy)?;
        let tol = 1e-12 * (1.0 + values.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        let mut changed = false;
        for s in 0..n {
            for (a, slot) in q.iter_mut().enumerate() {
                *slot = q_value(kernel, rewards, gamma, s, a, &values);
            }
            let best = argmax_first(&q, 0.0);
            if q[best] > q[policy[s]] + tol {
                policy[s] = best;
                changed = true;
            }
        }
        if !changed {
            return Ok(DiscountedSolution {
                policy: DeterministicPolicy::new(policy),
                values,
                improvement_steps: step,
            });
        }
    }
    Err(Error::NoConvergence("discounted policy iteration cycled".into()))
}

/// Planner output.
#[derive(Clone, Debug)]
pub struct PlannerOutcome {
    pub policy: DeterministicPolicy,
    pub gamma: f64,
    pub per_pair: u64,
    /// Samples drawn during this call.
    pub samples_used: u64,
}

/// Plans on a given kernel (empirical or exact) with perturbed rewards.
pub fn plan_with_kernel(
    kernel: &Kernel,
    rewards: &[f64],
    cfg: &PlannerConfig,
    seed: u64,
) -> Result<DiscountedSolution> {
    cfg.validate()?;
    let gamma = discount_factor(cfg.eps, cfg.h_bar);
    let scale = cfg.perturb_scale.unwrap_or(cfg.eps / 72.0);
    let perturbed = perturb_rewards(rewards, scale, seed);
    solve_discounted(kernel, &perturbed, gamma)
}

/// Samples the per-pair budget, then plans on the empirical kernel.
///
/// With `reuse_store` the store is only topped up to the budget; otherwise
/// the full budget is drawn on top of whatever the store holds.
pub fn plan_with_span_bound(
    gm: &mut GenerativeModel,
    store: &mut SampleStore,
    cfg: &PlannerConfig,
    seed: u64,
    reuse_store: bool,
) -> Result<PlannerOutcome> {
    cfg.validate()?;
    let per_pair = sample_budget(cfg.eps, cfg.h_bar, cfg.delta, cfg.c2, gm.num_states(), gm.num_actions());
    let start = gm.samples_drawn();
    if reuse_store {
        top_up(gm, store, per_pair)?;
    } else {
        collect_uniform(gm, store, per_pair)?;
    }
    let kernel = store.empirical_kernel();
    let sol = plan_with_kernel(&kernel, gm.mean_rewards(), cfg, seed)?;
    Ok(PlannerOutcome {
        policy: sol.policy,
        gamma: discount_factor(cfg.eps, cfg.h_bar),
        per_pair,
        samples_used: gm.samples_drawn() - start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_and_discount_formulas() {
        let gamma = discount_factor(0.1, 2.0);
        assert!((gamma - (1.0 - 0.1 / 24.0)).abs() < 1e-15);
        let n = sample_budget(0.1, 2.0, 0.1, 1.0, 3, 2);
        let expect = (144.0 * 2.0 / 0.01 * (12.0f64 * 6.0 / 0.01).ln()).ceil() as u64;
        assert_eq!(n, expect);
        assert_eq!(sample_budget(0.1, 0.0, 0.1, 1.0, 3, 2), 0);
    }

    #[test]
    fn zero_scale_perturbation_is_identity() {
        assert_eq!(perturb_rewards(&[0.1, 0.7], 0.0, 4), vec![0.1, 0.7]);
        let p = perturb_rewards(&[0.1, 0.7], 0.01, 4);
        assert!(p.iter().zip([0.1, 0.7]).all(|(x, r)| *x >= r && *x <= r + 0.01));
    }

    #[test]
    fn discounted_solve_on_two_state_chain() {
        // stay in 0 for reward 1, or move to 1 for nothing
        let kernel = Kernel::new(2, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let sol = solve_discounted(&kernel, &[1.0, 0.0, 0.0, 0.0], 0.9).unwrap();
        assert_eq!(sol.policy.actions(), &[0, 0]);
        assert!((sol.values[0] - 10.0).abs() < 1e-9);
        assert!((sol.values[1] - 9.0).abs() < 1e-9);
    }
}
