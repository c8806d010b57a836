//! Tabular MDP models and exact oracles.
//!
//! Everything here works on the true model. The learners in the other modules
//! only see a [`crate::sampling::GenerativeModel`]; the oracles are used to
//! score their output.

mod constants;
mod diameter;
mod io;
mod linalg;
mod model;
mod solve;
mod structure;

pub use constants::{compute_constants, MdpConstants, DEFAULT_POLICY_CAP};
pub use diameter::{exact_diameter, hitting_times, HittingOptions};
pub use io::{load_mdp, mdp_from_json, mdp_to_json, save_mdp};
pub use linalg::inf_norm;
pub use model::{DeterministicPolicy, Kernel, PolicyIter, TabularMdp, ROW_SUM_TOL};
pub use solve::{
    bellman_residual, greedy_policy, optimal_gain_bias, optimal_gain_bias_with,
    poisson_residual, policy_gain_bias, policy_gain_via_stationary, GainBias, OptimalSolution,
    SolveOptions,
};
pub use structure::{
    is_communicating, is_weakly_communicating, policy_is_unichain, recurrent_classes,
};

/// Index of the first entry within `tol` of the maximum.
pub fn argmax_first(values: &[f64], tol: f64) -> usize {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values.iter().position(|&v| v >= best - tol).unwrap_or(0)
}

/// Index of the first entry within `tol` of the minimum.
pub fn argmin_first(values: &[f64], tol: f64) -> usize {
    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
    values.iter().position(|&v| v <= best + tol).unwrap_or(0)
}

/// `max - min` of a slice (0 for an empty slice).
pub fn span(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    hi - lo
}
