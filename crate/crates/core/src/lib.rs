//! Sample-complexity lab for identifying near gain-optimal policies in
//! average-reward MDPs from a generative model.
//!
//! The crate is organised bottom-up:
//!
//! - [`mdp`]: tabular models, exact gain/bias/diameter oracles, structure checks.
//! - [`instances`]: the hard instance families and seeded random generators.
//! - [`sampling`]: seeded generative model and sample bookkeeping.
//! - [`diameter`]: confidence radii, optimistic SSP value iteration, diameter estimation.
//! - [`planner`]: span-bound planner via a discounted reduction.
//! - [`dfe`]: diameter-free exploration (estimate, then plan).
//! - [`stopping`]: KL confidence bounds and the adaptive stopping rule.
//! - [`experiments`]: trial records, configs, bench runner and the CLI.

pub mod dfe;
pub mod diameter;
pub mod error;
pub mod experiments;
pub mod instances;
pub mod mdp;
pub mod planner;
pub mod sampling;
pub mod stopping;

pub use error::{Error, Result};
pub use mdp::{DeterministicPolicy, GainBias, Kernel, TabularMdp};
