//! Hard instance families and seeded random generators.
//!
//! State and action indices are zero-based. In the three-state families,
//! action 0 is the "full line" action and action 1 the "dashed" one. Where
//! a state has fewer distinct moves than actions, the first move is
//! duplicated into the remaining slots. Unannotated transitions carry zero
//! reward.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Kernel, TabularMdp};

/// Serializable description of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum InstanceSpec {
    Mr { r: f64, p: f64 },
    MrErgodic { r: f64, p: f64, tau: f64 },
    Mpp { p: f64, p_prime: f64 },
    Mj { states: usize, actions: usize, eps: f64, #[serde(default)] j: Vec<usize> },
    Random { states: usize, actions: usize, seed: u64 },
}

impl InstanceSpec {
    pub fn build(&self) -> Result<TabularMdp> {
        match self {
            InstanceSpec::Mr { r, p } => make_m_r(*r, *p),
            InstanceSpec::MrErgodic { r, p, tau } => make_m_r_ergodic(*r, *p, *tau),
            InstanceSpec::Mpp { p, p_prime } => make_m_pp(*p, *p_prime),
            InstanceSpec::Mj { states, actions, eps, j } => {
                let j = if j.is_empty() { vec![0; states.saturating_sub(1)] } else { j.clone() };
                make_m_j(*states, *actions, *eps, &j)
            }
            InstanceSpec::Random { states, actions, seed } => {
                make_random_communicating(*states, *actions, *seed)
            }
        }
    }

    /// Short label without commas, used in result files.
    pub fn label(&self) -> String {
        match self {
            InstanceSpec::Mr { r, p } => format!("MR[r={r};p={p}]"),
            InstanceSpec::MrErgodic { r, p, tau } => format!("MR_ERGODIC[r={r};p={p};tau={tau}]"),
            InstanceSpec::Mpp { p, p_prime } => format!("MPP[p={p};p_prime={p_prime}]"),
            InstanceSpec::Mj { states, actions, eps, j } => {
                let j: Vec<String> = j.iter().map(|a| a.to_string()).collect();
                format!("MJ[S={states};A={actions};eps={eps};j={}]", j.join("-"))
            }
            InstanceSpec::Random { states, actions, seed } => {
                format!("RANDOM[S={states};A={actions};seed={seed}]")
            }
        }
    }
}

fn check_prob(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || !x.is_finite() {
        return Err(Error::InvalidParams(format!("{name} = {x} is not a probability")));
    }
    Ok(())
}

/// Dense builder for small hand-written instances.
struct Builder {
    n: usize,
    a: usize,
    probs: Vec<f64>,
    rewards: Vec<f64>,
}

impl Builder {
    fn new(n: usize, a: usize) -> Self {
        Builder { n, a, probs: vec![0.0; n * a * n], rewards: vec![0.0; n * a] }
    }

    fn set(&mut self, s: usize, a: usize, moves: &[(usize, f64)], reward: f64) {
        let base = (s * self.a + a) * self.n;
        self.probs[base..base + self.n].iter_mut().for_each(|x| *x = 0.0);
        for &(t, p) in moves {
            self.probs[base + t] += p;
        }
        self.rewards[s * self.a + a] = reward;
    }

    fn build(self) -> Result<TabularMdp> {
        TabularMdp::new(Kernel::new(self.n, self.a, self.probs)?, self.rewards)
    }
}

/// Three-state hard instance for bias-span estimation.
///
/// State 0 self-loops with reward 1/2 or jumps to state 2; state 1
/// self-loops with reward `r` or returns to 0; state 2 drifts to state 1
/// with probability `p` or returns to 0.
pub fn make_m_r(r: f64, p: f64) -> Result<TabularMdp> {
    make_m_r_ergodic(r, p, 0.0)
}

/// [`make_m_r`] with leakage `tau` out of state 0's self-loop, split evenly
/// to states 1 and 2, and a return edge from state 1's self-loop with
/// probability `tau * p / (1 + p)` and reward `1/2 - |r - 1/2|`.
pub fn make_m_r_ergodic(r: f64, p: f64, tau: f64) -> Result<TabularMdp> {
    check_prob("R", r)?;
    check_prob("p", p)?;
    check_prob("tau", tau)?;
    let tau_ret = ergodic_return_prob(tau, p);
    let eps = (r - 0.5).abs();
    let mut b = Builder::new(3, 2);
    b.set(0, 0, &[(0, 1.0 - tau), (1, tau / 2.0), (2, tau / 2.0)], 0.5);
    b.set(0, 1, &[(2, 1.0)], 0.0);
    b.set(1, 0, &[(0, 1.0)], 0.0);
    b.set(1, 1, &[(1, 1.0 - tau_ret), (0, tau_ret)], (1.0 - tau_ret) * r + tau_ret * (0.5 - eps));
    b.set(2, 0, &[(0, 1.0)], 0.0);
    b.set(2, 1, &[(2, 1.0 - p), (1, p)], 0.0);
    b.build()
}

/// Return probability `tau * p / (1 + p)` of the ergodic variant.
pub fn ergodic_return_prob(tau: f64, p: f64) -> f64 {
    tau * p / (1.0 + p)
}

/// Three-state slow-mixing instance.
///
/// From state 0 the full action earns 1 and leaks to state 2 (reward 0,
/// returns with `p_prime`); the dashed action earns 0 and leaks to state 1
/// (reward 1, returns with `p_prime`). Both leak with probability `p`.
pub fn make_m_pp(p: f64, p_prime: f64) -> Result<TabularMdp> {
    if !(p > 0.0 && p < 1.0 && p_prime > 0.0 && p_prime < 1.0) {
        return Err(Error::InvalidParams(format!("need 0 < p, p' < 1, got {p}, {p_prime}")));
    }
    let mut b = Builder::new(3, 2);
    b.set(0, 0, &[(0, 1.0 - p), (2, p)], 1.0);
    b.set(0, 1, &[(0, 1.0 - p), (1, p)], 0.0);
    for a in 0..2 {
        b.set(1, a, &[(1, 1.0 - p_prime), (0, p_prime)], 1.0);
        b.set(2, a, &[(2, 1.0 - p_prime), (0, p_prime)], 0.0);
    }
    b.build()
}

/// Escape probability `16 eps / A^(S-1)` of the combination-lock instance.
pub fn m_j_escape_prob(states: usize, actions: usize, eps: f64) -> Result<f64> {
    let exp = u32::try_from(states.saturating_sub(1))
        .map_err(|_| Error::Overflow("too many states".into()))?;
    let count = (actions as u64)
        .checked_pow(exp)
        .ok_or_else(|| Error::Overflow(format!("{actions}^{exp} overflows")))?;
    Ok(16.0 * eps / count as f64)
}

/// Combination-lock instance: state 0 pays 1 and leaks to state 1 with
/// small probability; from state 1 only the action sequence `j` walks
/// through states 2, ..., S-1 and back to 0, any other action resets to 1.
pub fn make_m_j(states: usize, actions: usize, eps: f64, j: &[usize]) -> Result<TabularMdp> {
    if states < 2 || actions < 1 {
        return Err(Error::InvalidParams("need at least 2 states and 1 action".into()));
    }
    if j.len() != states - 1 || j.iter().any(|&a| a >= actions) {
        return Err(Error::InvalidParams(format!(
            "action sequence must have {} entries below {actions}",
            states - 1
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParams(format!("eps = {eps} must be positive")));
    }
    let p = m_j_escape_prob(states, actions, eps)?;
    check_prob("escape probability", p)?;
    let mut b = Builder::new(states, actions);
    for a in 0..actions {
        b.set(0, a, &[(0, 1.0 - p), (1, p)], 1.0);
    }
    for s in 1..states {
        let next = (s + 1) % states;
        for a in 0..actions {
            let target = if a == j[s - 1] { next } else { 1 };
            b.set(s, a, &[(target, 1.0)], 0.0);
        }
    }
    b.build()
}

/// Seeded random communicating MDP.
///
/// Action 0 follows a random Hamiltonian cycle with probability at least
/// 0.3 on the successor, so the union graph is strongly connected. All
/// other rows are flat-Dirichlet draws; rewards are uniform in `[0, 1]`.
pub fn make_random_communicating(states: usize, actions: usize, seed: u64) -> Result<TabularMdp> {
    if states < 2 || actions < 1 {
        return Err(Error::InvalidParams("need at least 2 states and 1 action".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..states).collect();
    order.shuffle(&mut rng);
    let mut successor = vec![0; states];
    for i in 0..states {
        successor[order[i]] = order[(i + 1) % states];
    }
    let mut probs = Vec::with_capacity(states * actions * states);
    let mut rewards = Vec::with_capacity(states * actions);
    for s in 0..states {
        for a in 0..actions {
            let mut row = dirichlet_row(states, &mut rng);
            if a == 0 {
                let w: f64 = rng.random_range(0.3..1.0);
                row.iter_mut().for_each(|x| *x *= 1.0 - w);
                row[successor[s]] += w;
            }
            probs.extend(row);
            rewards.push(rng.random::<f64>());
        }
    }
    TabularMdp::new(Kernel::new(states, actions, probs)?, rewards)
}

fn dirichlet_row(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    let mut row: Vec<f64> = draws.iter().map(|x| x / total).collect();
    // put the rounding residue on the largest entry so the row sums to one
    let residue = 1.0 - row.iter().sum::<f64>();
    let big = crate::mdp::argmax_first(&row, 0.0);
    row[big] += residue;
    row
}

/// Closed-form quantities of the instance families.
pub mod oracle {
    /// Optimal gain of [`super::make_m_r`].
    pub fn m_r_gain(r: f64) -> f64 {
        r.max(0.5)
    }

    /// Optimal bias span of [`super::make_m_r`] (for `r != 1/2`).
    pub fn m_r_span(r: f64, p: f64) -> f64 {
        if r < 0.5 {
            0.5
        } else {
            r * (1.0 + p) / p
        }
    }

    /// Optimal bias of [`super::make_m_r`], normalised to `b[0] = 0`.
    pub fn m_r_bias(r: f64, p: f64) -> [f64; 3] {
        if r < 0.5 {
            [0.0, -0.5, -0.5]
        } else {
            let h = r * (1.0 + p) / p;
            [0.0, h, h - r / p]
        }
    }

    /// Drift probability making the spans at `r = 1/2 - eps` and
    /// `r = 1/2 + eps` differ by exactly `gap`.
    pub fn m_r_gap_prob(eps: f64, gap: f64) -> f64 {
        (0.5 + eps) / (gap - eps)
    }

    /// Gains of the full-line and dashed policies of [`super::make_m_pp`].
    pub fn m_pp_gains(p: f64, p_prime: f64) -> (f64, f64) {
        (p_prime / (p + p_prime), p / (p + p_prime))
    }

    /// Probability of being in state 0 after `n` steps from state 0.
    pub fn m_pp_occupancy(p: f64, p_prime: f64, n: u32) -> f64 {
        let pi = p_prime / (p + p_prime);
        (1.0 - p - p_prime).powi(n as i32) * (1.0 - pi) + pi
    }

    /// Optimal gain `1 / (1 + p (S - 1))` of [`super::make_m_j`].
    pub fn m_j_gain(states: usize, p: f64) -> f64 {
        1.0 / (1.0 + p * (states as f64 - 1.0))
    }

    /// Optimal bias of [`super::make_m_j`], normalised to `b[0] = 0`.
    pub fn m_j_bias(states: usize, p: f64) -> Vec<f64> {
        let g = m_j_gain(states, p);
        (0..states)
            .map(|k| if k == 0 { 0.0 } else { (k as f64 - states as f64) * g })
            .collect()
    }

    /// Longest travel time of [`super::make_m_j`]: from state 0 to state
    /// `S - 1` takes a geometric wait of mean `1/p` plus `S - 2` moves.
    pub fn m_j_diameter(states: usize, p: f64) -> f64 {
        1.0 / p + states as f64 - 2.0
    }
}
