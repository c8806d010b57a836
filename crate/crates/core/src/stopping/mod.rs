//! Adaptive stopping from Bellman-error brackets.
//!
//! For a bias guess `b`, the quantity `r(s,a) + p(s,a).b - b(s)` is bracketed
//! using confidence bounds on `p(s,a).b`. Once the spread between the
//! largest upper bracket and the smallest lower bracket (each maximised
//! over actions) is below `eps`, the lower-bracket greedy policy is
//! `eps`-optimal on the confidence event.

mod kl;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use kl::{kl_divergence, kl_lcb_linear, kl_ucb_linear};

use crate::error::{Error, Result};
use crate::mdp::{
    argmax_first, compute_constants, is_weakly_communicating, optimal_gain_bias,
    optimal_gain_bias_with, DeterministicPolicy, Kernel, SolveOptions, TabularMdp,
};
use crate::sampling::{collect_uniform, GenerativeModel, SampleStore};

/// Row smoothing applied when the empirical model is not weakly communicating.
pub const SMOOTHING_WEIGHT: f64 = 1e-6;

/// Time-uniform threshold `log(SA/delta) + (S-1) log(e (1 + y/(S-1)))`.
pub fn threshold(delta: f64, y: f64, num_states: usize, num_actions: usize) -> f64 {
    let base = ((num_states * num_actions) as f64 / delta).ln();
    if num_states <= 1 {
        return base;
    }
    let k = (num_states - 1) as f64;
    base + k * (1.0 + (y / k).ln_1p())
}

/// Pinsker-relaxed bounds `p_hat.b -/+ |b|_inf sqrt(2 x / n)` as `(upper, lower)`.
pub fn pinsker_bounds(p_hat: &[f64], b: &[f64], n_sa: u64, x_val: f64) -> (f64, f64) {
    let mean: f64 = p_hat.iter().zip(b).map(|(p, v)| p * v).sum();
    let norm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let width = norm * (2.0 * x_val / n_sa as f64).sqrt();
    (mean + width, mean - width)
}

/// Which confidence bounds the brackets use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundMode {
    /// Exact KL-ball optimisation.
    ExactKl,
    /// Pinsker relaxation (looser, cheaper).
    #[default]
    Pinsker,
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundMode::ExactKl => "exact_kl",
            BoundMode::Pinsker => "pinsker",
        })
    }
}

impl FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_kl" => Ok(BoundMode::ExactKl),
            "pinsker" => Ok(BoundMode::Pinsker),
            other => Err(Error::Config(format!("unknown bound mode '{other}'"))),
        }
    }
}

/// Per-pair bounds on `p.b` and the resulting brackets.
#[derive(Clone, Debug)]
pub struct BellmanErrorBrackets {
    /// Upper bounds on `p(s,a).b`, flat `[s][a]`.
    pub upper_bound: Vec<f64>,
    pub lower_bound: Vec<f64>,
    /// `r + U - b(s)`.
    pub upper: Vec<f64>,
    /// `r + L - b(s)`.
    pub lower: Vec<f64>,
    /// `max_s max_a upper`.
    pub upper_value: f64,
    /// `min_s max_a lower`.
    pub lower_value: f64,
    pub width: f64,
    /// `argmax_a lower(s, a)`, ties to the smallest index.
    pub recommendation: DeterministicPolicy,
}

/// Assembles the brackets for bias guess `b` from the store's counts.
///
/// Unvisited pairs use the uniform row and the trivial bounds `[min b, max b]`.
pub fn brackets(
    store: &SampleStore,
    rewards: &[f64],
    b: &[f64],
    delta: f64,
    mode: BoundMode,
) -> BellmanErrorBrackets {
    let n_s = store.num_states();
    let n_a = store.num_actions();
    let mut upper_bound = Vec::with_capacity(n_s * n_a);
    let mut lower_bound = Vec::with_capacity(n_s * n_a);
    let b_max = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let b_min = b.iter().cloned().fold(f64::INFINITY, f64::min);
    for s in 0..n_s {
        for a in 0..n_a {
            let n = store.count(s, a);
            let (u, l) = if n == 0 {
                (b_max, b_min)
            } else {
                let p_hat = store.empirical_row(s, a);
                let x = threshold(delta, n as f64, n_s, n_a);
                match mode {
                    BoundMode::Pinsker => pinsker_bounds(&p_hat, b, n, x),
                    BoundMode::ExactKl => {
                        let budget = x / n as f64;
                        (kl_ucb_linear(&p_hat, b, budget), kl_lcb_linear(&p_hat, b, budget))
                    }
                }
            };
            upper_bound.push(u);
            lower_bound.push(l);
        }
    }
    assemble(n_s, n_a, rewards, b, upper_bound, lower_bound)
}

/// Brackets from explicit per-pair bounds on `p.b`.
pub fn assemble(
    num_states: usize,
    num_actions: usize,
    rewards: &[f64],
    b: &[f64],
    upper_bound: Vec<f64>,
    lower_bound: Vec<f64>,
) -> BellmanErrorBrackets {
    let mut upper = Vec::with_capacity(num_states * num_actions);
    let mut lower = Vec::with_capacity(num_states * num_actions);
    for s in 0..num_states {
        for a in 0..num_actions {
            let i = s * num_actions + a;
            upper.push(rewards[i] + upper_bound[i] - b[s]);
            lower.push(rewards[i] + lower_bound[i] - b[s]);
        }
    }
    let mut upper_value = f64::NEG_INFINITY;
    let mut lower_value = f64::INFINITY;
    let mut actions = Vec::with_capacity(num_states);
    for s in 0..num_states {
        let row_u = &upper[s * num_actions..(s + 1) * num_actions];
        let row_l = &lower[s * num_actions..(s + 1) * num_actions];
        upper_value = upper_value.max(row_u.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let best = argmax_first(row_l, 0.0);
        lower_value = lower_value.min(row_l[best]);
        actions.push(best);
    }
    BellmanErrorBrackets {
        upper_bound,
        lower_bound,
        upper,
        lower,
        upper_value,
        lower_value,
        width: upper_value - lower_value,
        recommendation: DeterministicPolicy::new(actions),
    }
}

/// Mixes every row with the uniform distribution: `(1 - w) p + w / S`.
pub fn smooth_kernel(kernel: &Kernel, weight: f64) -> Kernel {
    let n = kernel.num_states();
    let probs = kernel.as_slice().iter().map(|p| (1.0 - weight) * p + weight / n as f64).collect();
    Kernel::new(n, kernel.num_actions(), probs).expect("mixture of distributions")
}

/// Optimal bias of the MDP `(kernel, rewards)`, normalised at state 0.
///
/// Falls back to [`SMOOTHING_WEIGHT`] row smoothing when the kernel is not
/// weakly communicating.
pub fn empirical_optimal_bias(kernel: &Kernel, rewards: &[f64]) -> Result<Vec<f64>> {
    let weight = if is_weakly_communicating(kernel) { 0.0 } else { SMOOTHING_WEIGHT };
    empirical_optimal_bias_smoothed(kernel, rewards, weight)
}

/// [`empirical_optimal_bias`] with an explicit smoothing weight.
pub fn empirical_optimal_bias_smoothed(kernel: &Kernel, rewards: &[f64], weight: f64) -> Result<Vec<f64>> {
    let kernel = if weight > 0.0 { smooth_kernel(kernel, weight) } else { kernel.clone() };
    let mdp = TabularMdp::new(kernel, rewards.to_vec())?;
    let opts = SolveOptions { tolerance: 1e-8, ..SolveOptions::default() };
    Ok(optimal_gain_bias_with(&mdp, &opts)?.gain_bias.bias)
}

#[derive(Clone, Debug)]
pub struct StoppingConfig {
    pub eps: f64,
    pub delta: f64,
    pub mode: BoundMode,
    /// Rounds between stopping checks; `max(1, SA/10)` when `None`.
    pub check_period: Option<u64>,
    /// Give up after this many rounds.
    pub max_rounds: u64,
}

impl StoppingConfig {
    pub fn new(eps: f64, delta: f64) -> Self {
        StoppingConfig { eps, delta, mode: BoundMode::Pinsker, check_period: None, max_rounds: 1_000_000 }
    }

    pub fn period(&self, num_states: usize, num_actions: usize) -> u64 {
        self.check_period.unwrap_or_else(|| ((num_states * num_actions) as u64 / 10).max(1))
    }
}

/// State of one stopping check.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundDiagnostic {
    pub round: u64,
    pub samples: u64,
    pub width: f64,
    pub upper: f64,
    pub lower: f64,
    pub stopped: bool,
}

#[derive(Clone, Debug)]
pub struct StoppingOutcome {
    /// `None` when the round budget ran out (the not-stopped marker).
    pub policy: Option<DeterministicPolicy>,
    /// Samples drawn.
    pub tau: u64,
    pub rounds: u64,
    pub final_width: f64,
    pub diagnostics: Vec<RoundDiagnostic>,
}

impl StoppingOutcome {
    pub fn stopped(&self) -> bool {
        self.policy.is_some()
    }
}

/// Uniform sampling with the adaptive stopping rule.
///
/// `observer` sees the store after every round (before any check), which
/// lets callers audit confidence events against a hidden kernel.
pub fn run_uniform_adaptive(
    gm: &mut GenerativeModel,
    cfg: &StoppingConfig,
    mut observer: Option<&mut dyn FnMut(u64, &SampleStore)>,
) -> Result<StoppingOutcome> {
    if !(cfg.eps > 0.0 && cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::InvalidParams(format!(
            "need eps > 0 and delta in (0,1), got {}, {}",
            cfg.eps, cfg.delta
        )));
    }
    let n_s = gm.num_states();
    let n_a = gm.num_actions();
    let period = cfg.period(n_s, n_a);
    let rewards = gm.mean_rewards().to_vec();
    let mut store = SampleStore::for_model(gm);
    let mut diagnostics = Vec::new();
    let mut width = 1.0;
    let mut round = 0;
    while round < cfg.max_rounds {
        collect_uniform(gm, &mut store, 1)?;
        round += 1;
        if let Some(obs) = observer.as_deref_mut() {
            obs(round, &store);
        }
        if round % period != 0 {
            continue;
        }
        let kernel = store.empirical_kernel();
        let bias = empirical_optimal_bias(&kernel, &rewards)?;
        let br = brackets(&store, &rewards, &bias, cfg.delta, cfg.mode);
        width = br.width;
        let stopped = width <= cfg.eps;
        diagnostics.push(RoundDiagnostic {
            round,
            samples: store.total(),
            width,
            upper: br.upper_value,
            lower: br.lower_value,
            stopped,
        });
        if stopped {
            return Ok(StoppingOutcome {
                policy: Some(br.recommendation),
                tau: store.total(),
                rounds: round,
                final_width: width,
                diagnostics,
            });
        }
    }
    Ok(StoppingOutcome { policy: None, tau: store.total(), rounds: round, final_width: width, diagnostics })
}

/// Ingredients and value of the closed-form high-probability ceiling on the
/// number of samples used by [`run_uniform_adaptive`].
#[derive(Clone, Debug)]
pub struct SampleBound {
    pub y: f64,
    pub c: f64,
    pub span: f64,
    pub sensitivity: f64,
    pub gain_gap: f64,
    pub bound: f64,
}

/// `SA(S-1) (y/C) (1 + (2C/y) log((y+2)/C))` with `y = 1 + ln(SA/delta)/(S-1)`
/// and `C = min(gap, eps)^2 / (288 max(H+1, sensitivity)^2)`.
pub fn sample_complexity_bound(mdp: &TabularMdp, eps: f64, delta: f64, cap: u64) -> Result<SampleBound> {
    let n_s = mdp.num_states();
    if n_s < 2 {
        return Err(Error::InvalidParams("the bound needs at least two states".into()));
    }
    let consts = compute_constants(mdp, cap)?;
    let span = optimal_gain_bias(mdp)?.gain_bias.span;
    let sa = (n_s * mdp.num_actions()) as f64;
    let k = (n_s - 1) as f64;
    let y = 1.0 + (sa / delta).ln() / k;
    let scale = (span + 1.0).max(consts.sensitivity);
    let c = consts.gain_gap.min(eps).powi(2) / (288.0 * scale * scale);
    let bound = sa * k * (y / c) * (1.0 + 2.0 * c / y * ((y + 2.0) / c).ln());
    Ok(SampleBound { y, c, span, sensitivity: consts.sensitivity, gain_gap: consts.gain_gap, bound })
}
