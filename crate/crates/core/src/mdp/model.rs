use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Rows of a kernel must sum to one within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Transition kernel `P(s' | s, a)` stored flat as `[s][a][s']`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl Kernel {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::InvalidMdp("need at least one state and one action".into()));
        }
        if probs.len() != num_states * num_actions * num_states {
            return Err(Error::InvalidMdp(format!(
                "kernel has {} entries, expected {}",
                probs.len(),
                num_states * num_actions * num_states
            )));
        }
        let kernel = Kernel { num_states, num_actions, probs };
        for s in 0..num_states {
            for a in 0..num_actions {
                let row = kernel.row(s, a);
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::InvalidMdp(format!(
                        "row ({s}, {a}) has an entry outside [0, 1]"
                    )));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidMdp(format!(
                        "row ({s}, {a}) sums to {total}"
                    )));
                }
            }
        }
        Ok(kernel)
    }

    /// Builds a kernel from `rows[s][a][s']`.
    pub fn from_nested(rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let num_states = rows.len();
        let num_actions = rows.first().map_or(0, |r| r.len());
        let mut probs = Vec::with_capacity(num_states * num_actions * num_states);
        for (s, per_action) in rows.iter().enumerate() {
            if per_action.len() != num_actions {
                return Err(Error::InvalidMdp(format!("state {s} has a different action count")));
            }
            for row in per_action {
                if row.len() != num_states {
                    return Err(Error::InvalidMdp(format!("state {s} has a malformed row")));
                }
                probs.extend_from_slice(row);
            }
        }
        Kernel::new(num_states, num_actions, probs)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.num_actions + a) * self.num_states;
        &self.probs[start..start + self.num_states]
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.row(s, a)[next]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Expected value of `v` after taking `a` in `s`.
    pub fn expect(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        self.row(s, a).iter().zip(v).map(|(p, x)| p * x).sum()
    }

    /// Markov chain induced by a deterministic policy.
    pub fn policy_matrix(&self, policy: &DeterministicPolicy) -> DMatrix<f64> {
        let n = self.num_states;
        DMatrix::from_fn(n, n, |s, t| self.prob(s, policy.action(s), t))
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_states)
            .map(|s| (0..self.num_actions).map(|a| self.row(s, a).to_vec()).collect())
            .collect()
    }
}

/// Finite MDP with mean rewards in `[0, 1]`, stored flat as `[s][a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularMdp {
    kernel: Kernel,
    rewards: Vec<f64>,
}

impl TabularMdp {
    pub fn new(kernel: Kernel, rewards: Vec<f64>) -> Result<Self> {
        if rewards.len() != kernel.num_states() * kernel.num_actions() {
            return Err(Error::InvalidMdp(format!(
                "reward table has {} entries, expected {}",
                rewards.len(),
                kernel.num_states() * kernel.num_actions()
            )));
        }
        if let Some(i) = rewards.iter().position(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidMdp(format!(
                "mean reward {} at pair {i} is outside [0, 1]",
                rewards[i]
            )));
        }
        Ok(TabularMdp { kernel, rewards })
    }

    /// Builds an MDP from `transitions[s][a][s']` and `rewards[s][a]`.
    pub fn from_nested(transitions: &[Vec<Vec<f64>>], rewards: &[Vec<f64>]) -> Result<Self> {
        let kernel = Kernel::from_nested(transitions)?;
        if rewards.len() != kernel.num_states()
            || rewards.iter().any(|r| r.len() != kernel.num_actions())
        {
            return Err(Error::InvalidMdp("reward table shape mismatch".into()));
        }
        TabularMdp::new(kernel, rewards.concat())
    }

    pub fn num_states(&self) -> usize {
        self.kernel.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.kernel.num_actions
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.num_actions() + a]
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        self.kernel.row(s, a)
    }

    /// One-step lookahead `r(s,a) + P(.|s,a) v`.
    pub fn q_value(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        self.reward(s, a) + self.kernel.expect(s, a, v)
    }

    /// Same kernel, different mean rewards.
    pub fn with_rewards(&self, rewards: Vec<f64>) -> Result<Self> {
        TabularMdp::new(self.kernel.clone(), rewards)
    }

    pub fn policy_rewards(&self, policy: &DeterministicPolicy) -> Vec<f64> {
        (0..self.num_states()).map(|s| self.reward(s, policy.action(s))).collect()
    }

    pub fn rewards_nested(&self) -> Vec<Vec<f64>> {
        self.rewards.chunks(self.num_actions()).map(|c| c.to_vec()).collect()
    }

    /// Number of deterministic policies, or `None` on overflow.
    pub fn policy_count(&self) -> Option<u64> {
        (self.num_actions() as u64).checked_pow(u32::try_from(self.num_states()).ok()?)
    }
}

/// A deterministic stationary policy: one action index per state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy(Vec<usize>);

impl DeterministicPolicy {
    pub fn new(actions: Vec<usize>) -> Self {
        DeterministicPolicy(actions)
    }

    /// The policy playing `action` everywhere.
    pub fn constant(num_states: usize, action: usize) -> Self {
        DeterministicPolicy(vec![action; num_states])
    }

    pub fn action(&self, s: usize) -> usize {
        self.0[s]
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn validate(&self, num_states: usize, num_actions: usize) -> Result<()> {
        if self.0.len() != num_states || self.0.iter().any(|&a| a >= num_actions) {
            return Err(Error::InvalidParams(format!(
                "policy {self} does not fit {num_states} states and {num_actions} actions"
            )));
        }
        Ok(())
    }

    /// All `A^S` deterministic policies in lexicographic order.
    pub fn enumerate(num_states: usize, num_actions: usize) -> PolicyIter {
        PolicyIter { current: Some(vec![0; num_states]), num_actions }
    }

    /// Relabels states: the returned policy plays `self.action(s)` at `perm[s]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = vec![0; self.0.len()];
        for (s, &t) in perm.iter().enumerate() {
            out[t] = self.0[s];
        }
        DeterministicPolicy(out)
    }
}

impl fmt::Display for DeterministicPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join("-"))
    }
}

impl FromStr for DeterministicPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split('-')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::InvalidParams(format!("bad policy '{s}': {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(DeterministicPolicy)
    }
}

/// Mixed-radix counter over deterministic policies.
pub struct PolicyIter {
    current: Option<Vec<usize>>,
    num_actions: usize,
}

impl Iterator for PolicyIter {
    type Item = DeterministicPolicy;

    fn next(&mut self) -> Option<Self::Item> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut i = cur.len();
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < self.num_actions {
                break;
            }
            cur[i] = 0;
        }
        Some(DeterministicPolicy(out))
    }
}
