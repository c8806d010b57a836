//! Diameter estimation from a generative model.
//!
//! Each round doubles a scale `W`, samples every pair until the L1
//! confidence radius drops below `eps / (4W)`, and runs optimistic
//! value iteration for the unit-cost shortest path to every goal. The loop
//! ends once the largest optimistic hitting time fits under `W`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::sampling::{top_up, GenerativeModel, SampleStore};

fn log_term(n: f64, num_states: usize) -> f64 {
    if num_states <= 1 {
        return 0.0;
    }
    let k = (num_states - 1) as f64;
    2.0 * k * (1.0 + (n / k).ln_1p())
}

/// L1 confidence radius after `n` samples of a pair:
/// `sqrt((2 log(SA/delta) + 2(S-1) log(e (1 + n/(S-1)))) / n)`.
pub fn confidence_radius(n: u64, delta: f64, num_states: usize, num_actions: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    let sa = (num_states * num_actions) as f64;
    ((2.0 * (sa / delta).ln() + log_term(n, num_states)) / n).sqrt()
}

/// Smallest `n` with `confidence_radius(n) <= eta`.
pub fn required_samples(delta: f64, eta: f64, num_states: usize, num_actions: usize) -> Result<u64> {
    if !(eta > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!("need eta > 0 and delta in (0,1), got {eta}, {delta}")));
    }
    let ok = |n: u64| confidence_radius(n, delta, num_states, num_actions) <= eta;
    let mut hi = 1u64;
    while !ok(hi) {
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| Error::Overflow(format!("sample size for eta = {eta}")))?;
    }
    let mut lo = hi / 2;
    // invariant: ok(hi), and lo == 0 or !ok(lo)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Closed-form upper bound on [`required_samples`]:
/// `(1/eta^2) [a + b log(c + (d / eta^4) (a + b (sqrt c + sqrt d))^2)]` with
/// `a = 2 log(SA/delta)`, `b = 2(S-1)`, `c = e`, `d = e/(S-1)`.
pub fn required_samples_upper_bound(delta: f64, eta: f64, num_states: usize, num_actions: usize) -> f64 {
    let a = 2.0 * ((num_states * num_actions) as f64 / delta).ln();
    if num_states <= 1 {
        return a / (eta * eta);
    }
    let b = 2.0 * (num_states - 1) as f64;
    let c = std::f64::consts::E;
    let d = c / (num_states - 1) as f64;
    let inner = a + b * (c.sqrt() + d.sqrt());
    (a + b * (c + d / eta.powi(4) * inner * inner).ln()) / (eta * eta)
}

/// L1 ball of transition vectors around an empirical row.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceSetL1 {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl ConfidenceSetL1 {
    pub fn contains(&self, p: &[f64]) -> bool {
        let dist: f64 = self.center.iter().zip(p).map(|(a, b)| (a - b).abs()).sum();
        dist <= self.radius
    }
}

/// Minimises `q . v` over distributions `q` with `|q - center|_1 <= radius`.
///
/// Moves up to `radius / 2` of mass onto the smallest entry of `v`, taken
/// from the largest entries first. Ties are ordered by index.
pub fn l1_ball_min(center: &[f64], v: &[f64], radius: f64) -> (f64, Vec<f64>) {
    let mut q = center.to_vec();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]).then(i.cmp(&j)));
    let best = order[0];
    let mut extra = (radius / 2.0).min(1.0 - q[best]).max(0.0);
    q[best] += extra;
    for &i in order.iter().rev() {
        if extra <= 0.0 {
            break;
        }
        if i == best {
            continue;
        }
        let take = q[i].min(extra);
        q[i] -= take;
        extra -= take;
    }
    let value = q.iter().zip(v).map(|(a, b)| a * b).sum();
    (value, q)
}

#[derive(Clone, Debug)]
pub struct EviOptions {
    /// Stop once successive iterates differ by at most this in sup norm.
    pub mu_vi: f64,
    pub max_iterations: usize,
}

/// Optimistic shortest-path values with the policy and kernel attaining them.
#[derive(Clone, Debug)]
pub struct EviSspResult {
    /// Optimistic values; zero at the goal.
    pub value: Vec<f64>,
    pub policy: Vec<usize>,
    /// Minimising transition vectors for every pair, flat `[s][a][s']`.
    pub optimistic_kernel: Vec<f64>,
    pub iterations: usize,
}

enum EviRun {
    Converged(EviSspResult),
    Capped { last: Vec<f64> },
}

fn evi_run(
    costs: &[f64],
    goal: usize,
    sets: &[ConfidenceSetL1],
    num_states: usize,
    num_actions: usize,
    opts: &EviOptions,
) -> EviRun {
    let mut v = vec![0.0; num_states];
    let mut next = vec![0.0; num_states];
    for iteration in 0..opts.max_iterations {
        let mut delta = 0.0f64;
        for s in 0..num_states {
            if s == goal {
                next[s] = 0.0;
                continue;
            }
            next[s] = (0..num_actions)
                .map(|a| {
                    let set = &sets[s * num_actions + a];
                    costs[s * num_actions + a] + l1_ball_min(&set.center, &v, set.radius).0
                })
                .fold(f64::INFINITY, f64::min);
            delta = delta.max((next[s] - v[s]).abs());
        }
        if delta <= opts.mu_vi {
            // report v_j, the iterate before the small step
            return EviRun::Converged(greedy_result(costs, goal, sets, num_states, num_actions, v, iteration));
        }
        std::mem::swap(&mut v, &mut next);
    }
    EviRun::Capped { last: v }
}

fn greedy_result(
    costs: &[f64],
    goal: usize,
    sets: &[ConfidenceSetL1],
    num_states: usize,
    num_actions: usize,
    value: Vec<f64>,
    iterations: usize,
) -> EviSspResult {
    let mut policy = vec![0; num_states];
    let mut kernel = Vec::with_capacity(num_states * num_actions * num_states);
    for s in 0..num_states {
        let mut best = f64::INFINITY;
        for a in 0..num_actions {
            let set = &sets[s * num_actions + a];
            let (inner, q) = l1_ball_min(&set.center, &value, set.radius);
            let total = costs[s * num_actions + a] + inner;
            if s != goal && total < best {
                best = total;
                policy[s] = a;
            }
            kernel.extend(q);
        }
    }
    EviSspResult { value, policy, optimistic_kernel: kernel, iterations }
}

/// Extended value iteration for the shortest path to `goal` with costs
/// `costs[s * A + a]` and one confidence set per pair.
pub fn evi_ssp(
    costs: &[f64],
    goal: usize,
    sets: &[ConfidenceSetL1],
    num_states: usize,
    num_actions: usize,
    opts: &EviOptions,
) -> Result<EviSspResult> {
    if sets.len() != num_states * num_actions || costs.len() != sets.len() || goal >= num_states {
        return Err(Error::InvalidParams("confidence sets do not match the model size".into()));
    }
    match evi_run(costs, goal, sets, num_states, num_actions, opts) {
        EviRun::Converged(r) => Ok(r),
        EviRun::Capped { .. } => Err(Error::IterationCap { cap: opts.max_iterations }),
    }
}

#[derive(Clone, Debug)]
pub struct DiameterOptions {
    /// Draw a fresh batch every round instead of topping up the store.
    pub fresh_samples: bool,
    /// Multiplier in the per-round value-iteration cap `k (S + 8W)`.
    pub evi_cap_factor: f64,
    /// Safety limit on doubling rounds.
    pub max_rounds: usize,
}

impl Default for DiameterOptions {
    fn default() -> Self {
        DiameterOptions { fresh_samples: false, evi_cap_factor: 10.0, max_rounds: 48 }
    }
}

/// One doubling round.
#[derive(Clone, Debug, PartialEq)]
pub struct DiameterRound {
    pub scale: f64,
    pub eta: f64,
    pub per_pair: u64,
    pub max_value: f64,
    /// Some goal hit the iteration cap above the current scale.
    pub capped: bool,
}

#[derive(Clone, Debug)]
pub struct DiameterEstimate {
    pub d_hat: f64,
    /// Samples drawn during this call.
    pub samples_used: u64,
    pub rounds: Vec<DiameterRound>,
}

/// Inflates the final optimistic hitting time `v` into an upper bound on
/// the diameter: `(1 + 2 eta k v) k v` with `k = 1 + min(eps, 1)`.
pub fn diameter_upper_estimate(v: f64, eta: f64, eps: f64) -> f64 {
    let k = 1.0 + eps.min(1.0);
    (1.0 + 2.0 * eta * k * v) * k * v
}

/// Estimates the diameter with accuracy `eps` and confidence `1 - delta`.
pub fn estimate_diameter(
    gm: &mut GenerativeModel,
    store: &mut SampleStore,
    eps: f64,
    delta: f64,
    opts: &DiameterOptions,
    mut log: Option<&mut dyn Write>,
) -> Result<DiameterEstimate> {
    if !(eps > 0.0 && delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!("need eps > 0 and delta in (0,1), got {eps}, {delta}")));
    }
    let n_s = gm.num_states();
    let n_a = gm.num_actions();
    let costs = vec![1.0; n_s * n_a];
    let mu_vi = eps.min(1.0) / 2.0;
    let start = gm.samples_drawn();
    let mut scale = 0.5;
    let mut v_max = 1.0;
    let mut eta = f64::INFINITY;
    let mut rounds = Vec::new();
    if let Some(w) = log.as_deref_mut() {
        writeln!(w, "round,scale,eta,per_pair,max_value,capped")?;
    }
    while v_max > scale {
        if rounds.len() >= opts.max_rounds {
            return Err(Error::NoConvergence(format!("diameter estimate still growing after {} rounds", rounds.len())));
        }
        scale *= 2.0;
        eta = eps / (4.0 * scale);
        let per_pair = required_samples(delta, eta, n_s, n_a)?;
        if opts.fresh_samples {
            *store = SampleStore::new(n_s, n_a);
        }
        top_up(gm, store, per_pair)?;
        let sets: Vec<ConfidenceSetL1> = (0..n_s)
            .flat_map(|s| (0..n_a).map(move |a| (s, a)))
            .map(|(s, a)| ConfidenceSetL1 { center: store.empirical_row(s, a), radius: eta })
            .collect();
        let cap = (opts.evi_cap_factor * (n_s as f64 + 8.0 * scale)).ceil() as usize;
        let evi_opts = EviOptions { mu_vi, max_iterations: cap };
        v_max = 0.0;
        let mut capped = false;
        for goal in 0..n_s {
            let values = match evi_run(&costs, goal, &sets, n_s, n_a, &evi_opts) {
                EviRun::Converged(r) => r.value,
                EviRun::Capped { last } => {
                    // a capped run already above the scale just forces another doubling
                    if last.iter().cloned().fold(0.0, f64::max) > scale {
                        capped = true;
                        last
                    } else {
                        return Err(Error::IterationCap { cap });
                    }
                }
            };
            let top = values
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != goal)
                .map(|(_, &x)| x)
                .fold(0.0, f64::max);
            v_max = v_max.max(top);
        }
        let round = DiameterRound { scale, eta, per_pair, max_value: v_max, capped };
        if let Some(w) = log.as_deref_mut() {
            writeln!(w, "{},{},{},{},{},{}", rounds.len() + 1, scale, eta, per_pair, v_max, capped)?;
        }
        rounds.push(round);
    }
    Ok(DiameterEstimate {
        d_hat: diameter_upper_estimate(v_max, eta, eps),
        samples_used: gm.samples_drawn() - start,
        rounds,
    })
}
