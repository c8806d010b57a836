//! Exact diameter via unit-cost shortest-path problems, one per goal state.

use nalgebra::{DMatrix, DVector};

use super::linalg::checked_solve;
use super::model::{Kernel, TabularMdp};
use super::structure::is_communicating;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct HittingOptions {
    /// Stop value iteration once successive iterates differ by at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Iterates above this are reported as divergence.
    pub value_cap: f64,
}

impl Default for HittingOptions {
    fn default() -> Self {
        HittingOptions { tolerance: 1e-9, max_iterations: 50_000_000, value_cap: 1e12 }
    }
}

/// Minimal expected hitting times of `goal` from every state (0 at the goal).
///
/// Value iteration from zero, then policy iteration with exact linear solves
/// on the greedy policy so slow-mixing instances are resolved to round-off.
pub fn hitting_times(kernel: &Kernel, goal: usize, opts: &HittingOptions) -> Result<Vec<f64>> {
    let n = kernel.num_states();
    let n_a = kernel.num_actions();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let mut delta = 0.0f64;
        for s in 0..n {
            if s == goal {
                next[s] = 0.0;
                continue;
            }
            next[s] = (0..n_a)
                .map(|a| 1.0 + kernel.expect(s, a, &v))
                .fold(f64::INFINITY, f64::min);
            delta = delta.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if v.iter().any(|&x| x > opts.value_cap) {
            return Err(Error::Divergence(format!("hitting time to state {goal} exceeds cap")));
        }
        if delta <= opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Divergence(format!(
            "hitting times to state {goal} did not settle in {} iterations",
            opts.max_iterations
        )));
    }
    Ok(polish(kernel, goal, v))
}

fn greedy(kernel: &Kernel, goal: usize, v: &[f64]) -> Vec<usize> {
    (0..kernel.num_states())
        .map(|s| {
            if s == goal {
                return 0;
            }
            let q: Vec<f64> = (0..kernel.num_actions()).map(|a| kernel.expect(s, a, v)).collect();
            super::argmin_first(&q, 0.0)
        })
        .collect()
}

fn evaluate(kernel: &Kernel, goal: usize, actions: &[usize]) -> Option<Vec<f64>> {
    let n = kernel.num_states();
    let a = DMatrix::from_fn(n, n, |s, t| {
        let id = if s == t { 1.0 } else { 0.0 };
        if s == goal || t == goal {
            id
        } else {
            id - kernel.prob(s, actions[s], t)
        }
    });
    let b = DVector::from_fn(n, |s, _| if s == goal { 0.0 } else { 1.0 });
    let x = checked_solve(&a, &b).ok()?;
    x.iter().all(|v| v.is_finite() && *v >= -1e-9).then(|| x.as_slice().to_vec())
}

fn polish(kernel: &Kernel, goal: usize, start: Vec<f64>) -> Vec<f64> {
    let n = kernel.num_states();
    let mut actions = greedy(kernel, goal, &start);
    let mut best = start;
    for _ in 0..(10 * n * kernel.num_actions() + 100) {
        let Some(v) = evaluate(kernel, goal, &actions) else { return best };
        let tol = 1e-12 * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        let candidate = greedy(kernel, goal, &v);
        let mut changed = false;
        for s in 0..n {
            if s != goal
                && kernel.expect(s, candidate[s], &v) < kernel.expect(s, actions[s], &v) - tol
            {
                actions[s] = candidate[s];
                changed = true;
            }
        }
        best = v;
        if !changed {
            break;
        }
    }
    best
}

/// Longest minimal expected travel time between two distinct states.
///
/// Returns [`Error::Divergence`] for non-communicating models.
pub fn exact_diameter(mdp: &TabularMdp) -> Result<f64> {
    exact_diameter_kernel(mdp.kernel(), &HittingOptions::default())
}

pub(crate) fn exact_diameter_kernel(kernel: &Kernel, opts: &HittingOptions) -> Result<f64> {
    if !is_communicating(kernel) {
        return Err(Error::Divergence("model is not communicating".into()));
    }
    let mut diameter = 0.0f64;
    for goal in 0..kernel.num_states() {
        let v = hitting_times(kernel, goal, opts)?;
        diameter = diameter.max(v.iter().cloned().fold(0.0, f64::max));
    }
    Ok(diameter)
}
