//! Seeded trial harness: configs, per-trial records, CSV output, summary
//! statistics and the command-line front end.

pub mod cli;
mod config;
mod records;

use std::time::Instant;

use rayon::prelude::*;

pub use config::{Algorithm, ExperimentConfig};
pub use records::{format_sig, read_records, write_records, TrialRecord};

use crate::dfe::{run_dfe, DfeConfig};
use crate::diameter::{estimate_diameter, DiameterOptions};
use crate::error::{Error, Result};
use crate::mdp::{exact_diameter, optimal_gain_bias, policy_gain_via_stationary, DeterministicPolicy, TabularMdp};
use crate::planner::{plan_with_span_bound, PlannerConfig};
use crate::sampling::{GenerativeModel, SampleStore};
use crate::stopping::{run_uniform_adaptive, StoppingConfig};

/// Slack on the success test, absorbing round-off in the gain evaluation.
pub const SUCCESS_SLACK: f64 = 1e-9;

/// Ground truth shared by all trials on one instance.
#[derive(Clone, Debug)]
pub struct TrialContext {
    pub mdp: TabularMdp,
    pub label: String,
    pub optimal_gain: f64,
    pub optimal_span: f64,
    /// Exact diameter; only computed for diameter runs.
    pub diameter: Option<f64>,
}

impl TrialContext {
    pub fn new(mdp: TabularMdp, label: String, algorithm: Algorithm) -> Result<Self> {
        let sol = optimal_gain_bias(&mdp)?;
        let diameter = if algorithm == Algorithm::Diameter { Some(exact_diameter(&mdp)?) } else { None };
        Ok(TrialContext {
            label,
            optimal_gain: sol.gain_bias.gain,
            optimal_span: sol.gain_bias.span,
            diameter,
            mdp,
        })
    }

    /// `g* - min_s g_pi(s)`, with rounding noise below zero clipped.
    pub fn gain_gap(&self, policy: &DeterministicPolicy) -> f64 {
        let gains = policy_gain_via_stationary(&self.mdp, policy);
        let worst = gains.iter().cloned().fold(f64::INFINITY, f64::min);
        (self.optimal_gain - worst).max(0.0)
    }
}

/// Runs one trial. `verbose` echoes diameter rounds on stderr.
pub fn run_trial(
    ctx: &TrialContext,
    cfg: &ExperimentConfig,
    eps: f64,
    seed: u64,
    verbose: bool,
) -> Result<TrialRecord> {
    let clock = Instant::now();
    let mut gm = GenerativeModel::new(&ctx.mdp, seed);
    let mut stderr = std::io::stderr();
    let log: Option<&mut dyn std::io::Write> = if verbose { Some(&mut stderr) } else { None };
    let diameter_opts = DiameterOptions { fresh_samples: cfg.fresh_samples, ..DiameterOptions::default() };
    let mut rec = TrialRecord {
        algorithm: cfg.algorithm.name().to_string(),
        instance: ctx.label.clone(),
        seed,
        eps,
        delta: cfg.delta,
        tau: 0,
        stopped: true,
        policy: String::new(),
        gain_gap: f64::NAN,
        success: true,
        d_hat: f64::NAN,
        wall_time_ms: 0.0,
    };
    let mut policy = None;
    match cfg.algorithm {
        Algorithm::Dfe => {
            let dfe_cfg = DfeConfig { c2: cfg.c2, reuse_samples: cfg.reuse_samples, diameter: diameter_opts };
            let out = run_dfe(&mut gm, eps, cfg.delta, &dfe_cfg, seed, log)?;
            rec.tau = out.tau;
            rec.d_hat = out.d_hat;
            policy = Some(out.policy);
        }
        Algorithm::Planner => {
            let h_bar = cfg.h_bar.unwrap_or(ctx.optimal_span);
            let pcfg = PlannerConfig { c2: cfg.c2, ..PlannerConfig::new(eps, h_bar, cfg.delta) };
            let mut store = SampleStore::for_model(&gm);
            let out = plan_with_span_bound(&mut gm, &mut store, &pcfg, seed, false)?;
            rec.tau = out.samples_used;
            policy = Some(out.policy);
        }
        Algorithm::Stopping => {
            let scfg = StoppingConfig {
                mode: cfg.bound_mode,
                check_period: cfg.check_period,
                max_rounds: cfg.max_rounds,
                ..StoppingConfig::new(eps, cfg.delta)
            };
            let out = run_uniform_adaptive(&mut gm, &scfg, None)?;
            if verbose {
                eprintln!("round,samples,width,upper,lower,stopped");
                for d in &out.diagnostics {
                    eprintln!(
                        "{},{},{},{},{},{}",
                        d.round,
                        d.samples,
                        format_sig(d.width),
                        format_sig(d.upper),
                        format_sig(d.lower),
                        d.stopped
                    );
                }
            }
            rec.tau = out.tau;
            rec.stopped = out.stopped();
            policy = out.policy;
        }
        Algorithm::Diameter => {
            let mut store = SampleStore::for_model(&gm);
            let est = estimate_diameter(&mut gm, &mut store, eps, cfg.delta, &diameter_opts, log)?;
            let d = ctx.diameter.ok_or_else(|| Error::Config("diameter oracle missing".into()))?;
            rec.tau = est.samples_used;
            rec.d_hat = est.d_hat;
            rec.success = diameter_bracket_holds(d, est.d_hat);
        }
    }
    if let Some(p) = policy {
        rec.gain_gap = ctx.gain_gap(&p);
        rec.success = rec.gain_gap <= eps + SUCCESS_SLACK;
        rec.policy = p.to_string();
    }
    rec.wall_time_ms = clock.elapsed().as_secs_f64() * 1e3;
    Ok(rec)
}

/// `D <= d_hat <= 4 D`, with a relative slack for round-off in `D`.
pub fn diameter_bracket_holds(diameter: f64, d_hat: f64) -> bool {
    let slack = 1e-9 * diameter.max(1.0);
    d_hat >= diameter - slack && d_hat <= 4.0 * diameter + slack
}

/// Recomputes a record's success flag from its stored policy / estimate.
pub fn rescore(ctx: &TrialContext, rec: &TrialRecord) -> Result<bool> {
    if rec.algorithm == Algorithm::Diameter.name() {
        let d = ctx.diameter.ok_or_else(|| Error::Config("diameter oracle missing".into()))?;
        return Ok(diameter_bracket_holds(d, rec.d_hat));
    }
    if rec.policy.is_empty() {
        return Ok(!rec.stopped);
    }
    let policy: DeterministicPolicy = rec.policy.parse()?;
    policy.validate(ctx.mdp.num_states(), ctx.mdp.num_actions())?;
    Ok(ctx.gain_gap(&policy) <= rec.eps + SUCCESS_SLACK)
}

/// Runs every (eps, seed) pair of the config on `workers` threads. Output
/// order is eps-major, then seed, independent of scheduling.
pub fn run_bench(cfg: &ExperimentConfig, workers: usize, verbose: bool) -> Result<Vec<TrialRecord>> {
    let (mdp, label) = cfg.build_instance()?;
    let ctx = TrialContext::new(mdp, label, cfg.algorithm)?;
    let jobs: Vec<(f64, u64)> =
        cfg.eps.iter().flat_map(|&e| cfg.seed_list().into_iter().map(move |s| (e, s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(eps, seed)| {
                let rec = run_trial(&ctx, cfg, eps, seed, verbose)?;
                if verbose {
                    eprintln!(
                        "eps={} seed={} tau={} success={} policy={}",
                        eps, seed, rec.tau, rec.success, rec.policy
                    );
                }
                Ok(rec)
            })
            .collect()
    })
}

/// Failure rate and its upper three-sigma binomial band.
pub fn pac_rate(records: &[TrialRecord]) -> (f64, f64) {
    if records.is_empty() {
        return (0.0, 0.0);
    }
    let n = records.len() as f64;
    let rate = records.iter().filter(|r| !r.success).count() as f64 / n;
    (rate, rate + 3.0 * (rate * (1.0 - rate) / n).sqrt())
}

/// Whether a failure frequency is consistent with a target `delta`: the
/// observed rate must not exceed `delta` by more than three binomial sigmas.
pub fn within_three_sigma(failures: usize, trials: usize, delta: f64) -> bool {
    let n = trials as f64;
    failures as f64 / n <= delta + 3.0 * (delta * (1.0 - delta) / n).sqrt()
}

/// Distinct eps values in first-seen order, with the records of each.
pub fn group_by_eps(records: &[TrialRecord]) -> Vec<(f64, Vec<&TrialRecord>)> {
    let mut groups: Vec<(f64, Vec<&TrialRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(e, _)| e.to_bits() == r.eps.to_bits()) {
            Some((_, g)) => g.push(r),
            None => groups.push((r.eps, vec![r])),
        }
    }
    groups
}

/// Least-squares slope of mean `ln tau` against `ln(1/eps)`.
pub fn scaling_slope(records: &[TrialRecord]) -> Result<f64> {
    let points: Vec<(f64, f64)> = group_by_eps(records)
        .into_iter()
        .map(|(eps, g)| {
            let mean = g.iter().map(|r| (r.tau.max(1) as f64).ln()).sum::<f64>() / g.len() as f64;
            ((1.0 / eps).ln(), mean)
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::InvalidParams(format!(
            "slope needs at least 3 distinct eps values, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Plain-text per-eps summary.
pub fn summary(records: &[TrialRecord]) -> String {
    let mut out = String::from("eps,trials,failure_rate,failure_upper,stopped_fraction,mean_tau\n");
    for (eps, g) in group_by_eps(records) {
        let owned: Vec<TrialRecord> = g.iter().map(|r| (*r).clone()).collect();
        let (rate, upper) = pac_rate(&owned);
        let stopped = g.iter().filter(|r| r.stopped).count() as f64 / g.len() as f64;
        let mean_tau = g.iter().map(|r| r.tau as f64).sum::<f64>() / g.len() as f64;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_sig(eps),
            g.len(),
            format_sig(rate),
            format_sig(upper),
            format_sig(stopped),
            format_sig(mean_tau)
        ));
    }
    if let Ok(slope) = scaling_slope(records) {
        out.push_str(&format!("slope_log_tau_vs_log_inv_eps,{}\n", format_sig(slope)));
    }
    out
}
