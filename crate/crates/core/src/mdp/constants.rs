//! Policy-class constants obtained by enumerating deterministic policies.

use super::model::{DeterministicPolicy, TabularMdp};
use super::solve::poisson_solve;
use crate::error::{Error, Result};

/// Default cap on the number of enumerated policies.
pub const DEFAULT_POLICY_CAP: u64 = 1_000_000;

/// Gains closer than this to the optimum count as optimal.
const GAIN_TIE: f64 = 1e-9;

/// Constants over the unichain deterministic policies of an MDP.
#[derive(Clone, Debug, PartialEq)]
pub struct MdpConstants {
    /// Smallest nonzero gap between a policy gain and the optimal gain
    /// (`+inf` when every unichain policy is optimal).
    pub gain_gap: f64,
    /// Largest infinity norm of an inverse Poisson operator.
    pub max_inverse_norm: f64,
    /// Largest infinity norm of a Poisson solution `(g, b)`.
    pub max_solution_norm: f64,
    /// `max_inverse_norm * (max_solution_norm + gain_gap / 2)`, dropping the
    /// gap term when the gap is infinite.
    pub sensitivity: f64,
    pub optimal_gain: f64,
    pub unichain_policies: u64,
    pub total_policies: u64,
}

/// Enumerates all `A^S` policies, skipping multichain (singular) ones.
pub fn compute_constants(mdp: &TabularMdp, cap: u64) -> Result<MdpConstants> {
    let total = mdp
        .policy_count()
        .filter(|&c| c <= cap)
        .ok_or_else(|| Error::TooLarge(format!("more than {cap} deterministic policies")))?;
    let mut gains = Vec::new();
    let mut max_inverse_norm = 0.0f64;
    let mut max_solution_norm = 0.0f64;
    for policy in DeterministicPolicy::enumerate(mdp.num_states(), mdp.num_actions()) {
        match poisson_solve(mdp.kernel(), mdp.rewards(), &policy) {
            Ok(sol) => {
                gains.push(sol.gain);
                max_inverse_norm = max_inverse_norm.max(sol.inverse_norm);
                max_solution_norm = max_solution_norm.max(sol.solution_norm);
            }
            Err(Error::SingularSystem) => continue,
            Err(e) => return Err(e),
        }
    }
    if gains.is_empty() {
        return Err(Error::SingularSystem);
    }
    let optimal_gain = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let gain_gap = gains
        .iter()
        .map(|g| optimal_gain - g)
        .filter(|&d| d > GAIN_TIE)
        .fold(f64::INFINITY, f64::min);
    let sensitivity = if gain_gap.is_finite() {
        max_inverse_norm * (max_solution_norm + gain_gap / 2.0)
    } else {
        max_inverse_norm * max_solution_norm
    };
    Ok(MdpConstants {
        gain_gap,
        max_inverse_norm,
        max_solution_norm,
        sensitivity,
        optimal_gain,
        unichain_policies: gains.len() as u64,
        total_policies: total,
    })
}
