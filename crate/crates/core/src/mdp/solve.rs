//! Gain and bias: Poisson solves for fixed policies, relative value iteration
//! plus policy-iteration polish for the optimal equation.

use nalgebra::{DMatrix, DVector};

use super::linalg::{checked_inverse, inf_norm};
use super::model::{DeterministicPolicy, Kernel, TabularMdp};
use super::structure::policy_is_unichain;
use super::{argmax_first, span};
use crate::error::{Error, Result};

/// Mixing weight of the lazy chain used once periodic oscillation is detected.
const LAZY_WEIGHT: f64 = 0.99;

/// Gain and bias of a policy or of the optimal equation.
///
/// The gain is the constant value shared by all states; the bias is
/// normalised so that `bias[0] == 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GainBias {
    pub gain: f64,
    pub bias: Vec<f64>,
    pub span: f64,
}

impl GainBias {
    fn new(gain: f64, bias: Vec<f64>) -> Self {
        let span = span(&bias);
        GainBias { gain, bias, span }
    }
}

/// Solution of the optimal Bellman equation with a greedy policy.
#[derive(Clone, Debug)]
pub struct OptimalSolution {
    pub gain_bias: GainBias,
    pub policy: DeterministicPolicy,
    pub bellman_residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Target Bellman residual.
    pub tolerance: f64,
    /// Relative value iteration budget.
    pub max_iterations: usize,
    /// Try exact policy-iteration polishing after a coarse RVI phase.
    pub polish: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tolerance: 1e-9, max_iterations: 2_000_000, polish: true }
    }
}

/// Output of a Poisson solve with the norms needed by the constant computations.
pub(crate) struct PoissonSolution {
    pub gain: f64,
    pub bias: Vec<f64>,
    pub inverse_norm: f64,
    pub solution_norm: f64,
}

/// Builds the Poisson operator whose unknowns are `(g, b(1)-b(0), ...)`.
fn poisson_operator(kernel: &Kernel, policy: &DeterministicPolicy) -> DMatrix<f64> {
    let n = kernel.num_states();
    DMatrix::from_fn(n, n, |s, j| {
        if j == 0 {
            return 1.0;
        }
        let identity = if s == j { 1.0 } else { 0.0 };
        identity - kernel.prob(s, policy.action(s), j)
    })
}

pub(crate) fn poisson_solve(
    kernel: &Kernel,
    rewards: &[f64],
    policy: &DeterministicPolicy,
) -> Result<PoissonSolution> {
    let n = kernel.num_states();
    let a = kernel.num_actions();
    policy.validate(n, a)?;
    let op = poisson_operator(kernel, policy);
    let inv = checked_inverse(&op);
    debug_assert!(
        inv.is_err() || policy_is_unichain(kernel, policy),
        "Poisson operator invertible for a multichain policy {policy}"
    );
    let inv = inv?;
    let r = DVector::from_fn(n, |s, _| rewards[s * a + policy.action(s)]);
    let h = &inv * r;
    let mut bias = vec![0.0; n];
    bias[1..n].copy_from_slice(&h.as_slice()[1..n]);
    Ok(PoissonSolution {
        gain: h[0],
        bias,
        inverse_norm: inf_norm(&inv),
        solution_norm: h.amax(),
    })
}

/// Gain and bias of a unichain policy from the Poisson equation.
///
/// Fails with [`Error::SingularSystem`] when the system is numerically
/// singular, which is the case for multichain policies.
pub fn policy_gain_bias(mdp: &TabularMdp, policy: &DeterministicPolicy) -> Result<GainBias> {
    let sol = poisson_solve(mdp.kernel(), mdp.rewards(), policy)?;
    Ok(GainBias::new(sol.gain, sol.bias))
}

/// `max_s |g + b(s) - r(s, pi(s)) - P b(s)|`.
pub fn poisson_residual(mdp: &TabularMdp, policy: &DeterministicPolicy, gb: &GainBias) -> f64 {
    (0..mdp.num_states())
        .map(|s| (gb.gain + gb.bias[s] - mdp.q_value(s, policy.action(s), &gb.bias)).abs())
        .fold(0.0, f64::max)
}

/// `max_s |max_a (r + P b)(s) - g - b(s)|`.
pub fn bellman_residual(mdp: &TabularMdp, gain: f64, bias: &[f64]) -> f64 {
    (0..mdp.num_states())
        .map(|s| {
            let best = (0..mdp.num_actions())
                .map(|a| mdp.q_value(s, a, bias))
                .fold(f64::NEG_INFINITY, f64::max);
            (best - gain - bias[s]).abs()
        })
        .fold(0.0, f64::max)
}

/// Greedy policy for `r + P b`; near-ties go to the smallest action index.
pub fn greedy_policy(mdp: &TabularMdp, bias: &[f64], tie_tol: f64) -> DeterministicPolicy {
    let mut q = vec![0.0; mdp.num_actions()];
    let actions = (0..mdp.num_states())
        .map(|s| {
            for (a, slot) in q.iter_mut().enumerate() {
                *slot = mdp.q_value(s, a, bias);
            }
            argmax_first(&q, tie_tol)
        })
        .collect();
    DeterministicPolicy::new(actions)
}

/// Gain vector of any policy, via the limit of powers of its lazy chain.
///
/// The lazy chain `(I + P) / 2` has the same Cesaro limit as `P` but is
/// aperiodic, so repeated squaring converges to the limiting matrix. Works
/// for multichain policies too.
pub fn policy_gain_via_stationary(mdp: &TabularMdp, policy: &DeterministicPolicy) -> Vec<f64> {
    let n = mdp.num_states();
    let p = mdp.kernel().policy_matrix(policy);
    let mut m = (DMatrix::identity(n, n) + p) * 0.5;
    for _ in 0..200 {
        let mut next = &m * &m;
        for mut row in next.row_iter_mut() {
            let total: f64 = row.sum();
            row /= total;
        }
        let diff = (&next - &m).amax();
        m = next;
        if diff <= 1e-15 {
            break;
        }
    }
    let r = DVector::from_vec(mdp.policy_rewards(policy));
    (m * r).as_slice().to_vec()
}

/// Optimal gain and bias with default options.
pub fn optimal_gain_bias(mdp: &TabularMdp) -> Result<OptimalSolution> {
    optimal_gain_bias_with(mdp, &SolveOptions::default())
}

/// Solves `g + b(s) = max_a [r(s,a) + P(.|s,a) b]`.
///
/// Relative value iteration runs first (switching to the lazy chain if the
/// span of successive differences stops shrinking), then average-reward
/// policy iteration with exact Poisson solves polishes the answer. If the
/// polish hits a multichain policy, RVI continues to the target tolerance.
pub fn optimal_gain_bias_with(mdp: &TabularMdp, opts: &SolveOptions) -> Result<OptimalSolution> {
    let mut rvi = Rvi::new(mdp);
    let coarse = opts.tolerance.max(1e-7);
    let warmup = opts.max_iterations.min(20_000);
    rvi.run(coarse, warmup);
    if opts.polish {
        if let Some(sol) = polish(mdp, &rvi.bias(), opts.tolerance, rvi.iterations) {
            return Ok(sol);
        }
    }
    if !rvi.run(opts.tolerance, opts.max_iterations) {
        return Err(Error::NoConvergence(format!(
            "relative value iteration span {} after {} iterations",
            rvi.last_span, rvi.iterations
        )));
    }
    let bias = rvi.bias();
    let gain = rvi.gain();
    let residual = bellman_residual(mdp, gain, &bias);
    let policy = greedy_policy(mdp, &bias, tie_tolerance(&bias));
    Ok(OptimalSolution {
        gain_bias: GainBias::new(gain, bias),
        policy,
        bellman_residual: residual,
        iterations: rvi.iterations,
    })
}

fn tie_tolerance(bias: &[f64]) -> f64 {
    1e-12 * (1.0 + bias.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

struct Rvi<'a> {
    mdp: &'a TabularMdp,
    v: Vec<f64>,
    next: Vec<f64>,
    lazy: bool,
    iterations: usize,
    last_span: f64,
    lo: f64,
    hi: f64,
    stalled: usize,
}

impl<'a> Rvi<'a> {
    fn new(mdp: &'a TabularMdp) -> Self {
        let n = mdp.num_states();
        Rvi {
            mdp,
            v: vec![0.0; n],
            next: vec![0.0; n],
            lazy: false,
            iterations: 0,
            last_span: f64::INFINITY,
            lo: 0.0,
            hi: 0.0,
            stalled: 0,
        }
    }

    /// Iterates until the span of `Tv - v` is at most `tol`; false if the budget ran out.
    fn run(&mut self, tol: f64, max_iterations: usize) -> bool {
        let n = self.mdp.num_states();
        let window = 2 * n + 2;
        while self.iterations < max_iterations {
            let (alpha, keep) = if self.lazy { (LAZY_WEIGHT, 1.0 - LAZY_WEIGHT) } else { (1.0, 0.0) };
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for s in 0..n {
                let best = (0..self.mdp.num_actions())
                    .map(|a| {
                        self.mdp.reward(s, a)
                            + alpha * self.mdp.kernel().expect(s, a, &self.v)
                            + keep * self.v[s]
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                self.next[s] = best;
                let d = best - self.v[s];
                lo = lo.min(d);
                hi = hi.max(d);
            }
            self.iterations += 1;
            let sp = hi - lo;
            let anchor = self.next[0];
            for s in 0..n {
                self.v[s] = self.next[s] - anchor;
            }
            self.lo = lo;
            self.hi = hi;
            if sp <= tol {
                self.last_span = sp;
                return true;
            }
            if sp >= self.last_span * (1.0 - 1e-9) {
                self.stalled += 1;
                if self.stalled >= window && !self.lazy {
                    self.lazy = true;
                    self.stalled = 0;
                }
            } else {
                self.stalled = 0;
            }
            self.last_span = sp;
        }
        false
    }

    fn gain(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Bias of the original chain (lazy iterates are rescaled).
    fn bias(&self) -> Vec<f64> {
        let scale = if self.lazy { LAZY_WEIGHT } else { 1.0 };
        self.v.iter().map(|x| x * scale).collect()
    }
}

/// Average-reward policy iteration from the greedy policy of `bias`.
fn polish(mdp: &TabularMdp, bias: &[f64], tol: f64, iterations: usize) -> Option<OptimalSolution> {
    let n = mdp.num_states();
    let n_a = mdp.num_actions();
    let mut policy = greedy_policy(mdp, bias, tie_tolerance(bias));
    let mut q = vec![0.0; n_a];
    for _ in 0..(10 * n * n_a + 100) {
        let sol = poisson_solve(mdp.kernel(), mdp.rewards(), &policy).ok()?;
        let improve_tol = tie_tolerance(&sol.bias);
        let mut actions = policy.actions().to_vec();
        let mut changed = false;
        for s in 0..n {
            for (a, slot) in q.iter_mut().enumerate() {
                *slot = mdp.q_value(s, a, &sol.bias);
            }
            let best = argmax_first(&q, 0.0);
            if q[best] > q[actions[s]] + improve_tol {
                actions[s] = best;
                changed = true;
            }
        }
        if !changed {
            let residual = bellman_residual(mdp, sol.gain, &sol.bias);
            if residual > tol {
                return None;
            }
            let greedy = greedy_policy(mdp, &sol.bias, improve_tol);
            return Some(OptimalSolution {
                gain_bias: GainBias::new(sol.gain, sol.bias),
                policy: greedy,
                bellman_residual: residual,
                iterations,
            });
        }
        policy = DeterministicPolicy::new(actions);
    }
    None
}
