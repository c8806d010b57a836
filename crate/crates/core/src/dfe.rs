//! Diameter-free exploration: estimate the diameter, then use it as the
//! span bound of the planner. Each phase gets half the error budget.

use std::io::Write;

use crate::diameter::{estimate_diameter, DiameterOptions};
use crate::error::{Error, Result};
use crate::mdp::DeterministicPolicy;
use crate::planner::{plan_with_span_bound, PlannerConfig};
use crate::sampling::{GenerativeModel, SampleStore};

#[derive(Clone, Debug)]
pub struct DfeConfig {
    pub c2: f64,
    /// Let the planner reuse the diameter phase's samples (off by default).
    pub reuse_samples: bool,
    pub diameter: DiameterOptions,
}

impl Default for DfeConfig {
    fn default() -> Self {
        DfeConfig { c2: 1.0, reuse_samples: false, diameter: DiameterOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct DfeOutcome {
    pub policy: DeterministicPolicy,
    pub d_hat: f64,
    pub tau_diameter: u64,
    pub tau_planner: u64,
    /// Total samples, `tau_diameter + tau_planner`.
    pub tau: u64,
}

/// Runs both phases against `gm`; `seed` drives the reward perturbation.
pub fn run_dfe(
    gm: &mut GenerativeModel,
    eps: f64,
    delta: f64,
    cfg: &DfeConfig,
    seed: u64,
    log: Option<&mut dyn Write>,
) -> Result<DfeOutcome> {
    if !(eps > 0.0 && eps <= 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!("need eps in (0,1] and delta in (0,1), got {eps}, {delta}")));
    }
    let mut store = SampleStore::for_model(gm);
    let est = estimate_diameter(gm, &mut store, 1.0, delta / 2.0, &cfg.diameter, log)?;
    if !cfg.reuse_samples {
        store = SampleStore::for_model(gm);
    }
    let planner_cfg = PlannerConfig { c2: cfg.c2, ..PlannerConfig::new(eps, est.d_hat, delta / 2.0) };
    let plan = plan_with_span_bound(gm, &mut store, &planner_cfg, seed, cfg.reuse_samples)?;
    Ok(DfeOutcome {
        policy: plan.policy,
        d_hat: est.d_hat,
        tau_diameter: est.samples_used,
        tau_planner: plan.samples_used,
        tau: est.samples_used + plan.samples_used,
    })
}
