//! Seeded generative model and per-pair sample bookkeeping.
//!
//! Every state-action pair owns an independent ChaCha8 stream derived from
//! the model seed, so the samples a pair produces do not depend on the order
//! in which pairs are queried.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::mdp::{DeterministicPolicy, Kernel, TabularMdp};

/// One sampled transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub next: usize,
    pub reward: f64,
}

/// Generative access to a hidden MDP.
///
/// Learners see the sizes and the mean rewards but never the kernel.
/// Rewards are Bernoulli draws with the tabulated means.
pub struct GenerativeModel {
    kernel: Kernel,
    rewards: Vec<f64>,
    streams: Vec<ChaCha8Rng>,
    trace: Option<Box<dyn Write + Send>>,
    drawn: u64,
}

impl GenerativeModel {
    pub fn new(mdp: &TabularMdp, seed: u64) -> Self {
        let pairs = mdp.num_states() * mdp.num_actions();
        let streams = (0..pairs)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rng
            })
            .collect();
        GenerativeModel {
            kernel: mdp.kernel().clone(),
            rewards: mdp.rewards().to_vec(),
            streams,
            trace: None,
            drawn: 0,
        }
    }

    /// Writes every subsequent sample as a `t,s,a,next,reward` line.
    ///
    /// While a trace is attached, batches are drawn one sample at a time.
    pub fn set_trace(&mut self, sink: Box<dyn Write + Send>) -> Result<()> {
        let mut sink = sink;
        writeln!(sink, "t,s,a,next,reward")?;
        self.trace = Some(sink);
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.kernel.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.kernel.num_actions()
    }

    /// Known mean rewards, flat `[s][a]`.
    pub fn mean_rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Total number of transitions drawn so far.
    pub fn samples_drawn(&self) -> u64 {
        self.drawn
    }

    fn check_pair(&self, s: usize, a: usize) -> Result<usize> {
        if s >= self.num_states() || a >= self.num_actions() {
            return Err(Error::Sampling(format!("pair ({s}, {a}) is out of range")));
        }
        Ok(s * self.num_actions() + a)
    }

    pub fn sample(&mut self, s: usize, a: usize) -> Result<Transition> {
        let pair = self.check_pair(s, a)?;
        let rng = &mut self.streams[pair];
        let u: f64 = rng.random();
        let row = self.kernel.row(s, a);
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (t, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = t;
                break;
            }
        }
        // never land on a zero-probability tail state through rounding
        while row[next] == 0.0 && next > 0 {
            next -= 1;
        }
        let reward = if rng.random_bool(self.rewards[pair]) { 1.0 } else { 0.0 };
        if let Some(sink) = self.trace.as_mut() {
            writeln!(sink, "{},{s},{a},{next},{reward}", self.drawn)?;
        }
        self.drawn += 1;
        Ok(Transition { next, reward })
    }

    /// Draws `n` samples of `(s, a)` into `store`.
    ///
    /// Without a trace, the next-state counts come from one multinomial
    /// draw (sequential binomials) and the reward total from one binomial.
    pub fn sample_into(&mut self, s: usize, a: usize, n: u64, store: &mut SampleStore) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let pair = self.check_pair(s, a)?;
        if self.trace.is_some() {
            for _ in 0..n {
                let tr = self.sample(s, a)?;
                store.record(s, a, tr.next, tr.reward);
            }
            return Ok(());
        }
        let rng = &mut self.streams[pair];
        let row = self.kernel.row(s, a);
        let mut counts = vec![0u64; row.len()];
        let mut remaining = n;
        let mut mass = 1.0;
        for (t, &p) in row.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            if t + 1 == row.len() || p >= mass {
                counts[t] = remaining;
                break;
            }
            let q = (p / mass).clamp(0.0, 1.0);
            let k = binomial(remaining, q, rng)?;
            counts[t] = k;
            remaining -= k;
            mass -= p;
        }
        // rounding may leave the tail with zero mass; fold leftovers into the last supported state
        let last = row.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for t in last + 1..row.len() {
            counts[last] += std::mem::take(&mut counts[t]);
        }
        let wins = binomial(n, self.rewards[pair], rng)?;
        store.record_batch(s, a, &counts, wins as f64);
        self.drawn += n;
        Ok(())
    }
}

fn binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    if p <= 0.0 {
        return Ok(0);
    }
    if p >= 1.0 {
        return Ok(n);
    }
    let dist = Binomial::new(n, p).map_err(|e| Error::Sampling(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Per-pair counts, next-state counts and reward sums.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleStore {
    num_states: usize,
    num_actions: usize,
    counts: Vec<u64>,
    next_counts: Vec<u64>,
    reward_sums: Vec<f64>,
    total: u64,
}

impl SampleStore {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        let pairs = num_states * num_actions;
        SampleStore {
            num_states,
            num_actions,
            counts: vec![0; pairs],
            next_counts: vec![0; pairs * num_states],
            reward_sums: vec![0.0; pairs],
            total: 0,
        }
    }

    pub fn for_model(gm: &GenerativeModel) -> Self {
        SampleStore::new(gm.num_states(), gm.num_actions())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn record(&mut self, s: usize, a: usize, next: usize, reward: f64) {
        let pair = s * self.num_actions + a;
        self.counts[pair] += 1;
        self.next_counts[pair * self.num_states + next] += 1;
        self.reward_sums[pair] += reward;
        self.total += 1;
    }

    pub fn record_batch(&mut self, s: usize, a: usize, next_counts: &[u64], reward_sum: f64) {
        let pair = s * self.num_actions + a;
        let n: u64 = next_counts.iter().sum();
        self.counts[pair] += n;
        let base = pair * self.num_states;
        for (slot, k) in self.next_counts[base..base + self.num_states].iter_mut().zip(next_counts) {
            *slot += k;
        }
        self.reward_sums[pair] += reward_sum;
        self.total += n;
    }

    pub fn count(&self, s: usize, a: usize) -> u64 {
        self.counts[s * self.num_actions + a]
    }

    pub fn next_counts(&self, s: usize, a: usize) -> &[u64] {
        let base = (s * self.num_actions + a) * self.num_states;
        &self.next_counts[base..base + self.num_states]
    }

    pub fn reward_sum(&self, s: usize, a: usize) -> f64 {
        self.reward_sums[s * self.num_actions + a]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn min_count(&self) -> u64 {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    /// Empirical next-state distribution; uniform when the pair is unvisited.
    pub fn empirical_row(&self, s: usize, a: usize) -> Vec<f64> {
        let n = self.count(s, a);
        if n == 0 {
            return vec![1.0 / self.num_states as f64; self.num_states];
        }
        self.next_counts(s, a).iter().map(|&k| k as f64 / n as f64).collect()
    }

    pub fn empirical_kernel(&self) -> Kernel {
        let mut probs = Vec::with_capacity(self.next_counts.len());
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                probs.extend(self.empirical_row(s, a));
            }
        }
        Kernel::new(self.num_states, self.num_actions, probs)
            .expect("empirical rows are distributions")
    }

    /// Counts agree with next-state counts, and the total with their sum.
    pub fn check_invariants(&self) -> bool {
        let per_pair_ok = (0..self.num_states).all(|s| {
            (0..self.num_actions)
                .all(|a| self.next_counts(s, a).iter().sum::<u64>() == self.count(s, a))
        });
        per_pair_ok && self.counts.iter().sum::<u64>() == self.total
    }
}

/// Draws `per_pair` samples from every state-action pair.
pub fn collect_uniform(gm: &mut GenerativeModel, store: &mut SampleStore, per_pair: u64) -> Result<()> {
    for s in 0..gm.num_states() {
        for a in 0..gm.num_actions() {
            gm.sample_into(s, a, per_pair, store)?;
        }
    }
    Ok(())
}

/// Tops every pair up to at least `target` samples.
pub fn top_up(gm: &mut GenerativeModel, store: &mut SampleStore, target: u64) -> Result<()> {
    for s in 0..gm.num_states() {
        for a in 0..gm.num_actions() {
            let have = store.count(s, a);
            gm.sample_into(s, a, target.saturating_sub(have), store)?;
        }
    }
    Ok(())
}

/// Runs the chain of `policy` for `steps` transitions from `start` and
/// returns the visited states, starting state included.
pub fn simulate_policy(
    kernel: &Kernel,
    policy: &DeterministicPolicy,
    start: usize,
    steps: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let mut path = Vec::with_capacity(steps + 1);
    let mut s = start;
    path.push(s);
    for _ in 0..steps {
        let u: f64 = rng.random();
        let row = kernel.row(s, policy.action(s));
        let mut acc = 0.0;
        let mut next = row.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (t, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc && p > 0.0 {
                next = t;
                break;
            }
        }
        s = next;
        path.push(s);
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::make_m_r;

    #[test]
    fn same_seed_same_samples() {
        let mdp = make_m_r(0.4, 0.2).unwrap();
        let mut a = GenerativeModel::new(&mdp, 9);
        let mut b = GenerativeModel::new(&mdp, 9);
        for _ in 0..100 {
            assert_eq!(a.sample(2, 1).unwrap(), b.sample(2, 1).unwrap());
        }
    }

    #[test]
    fn pair_streams_are_independent_of_query_order() {
        let mdp = make_m_r(0.4, 0.2).unwrap();
        let mut a = GenerativeModel::new(&mdp, 3);
        let mut b = GenerativeModel::new(&mdp, 3);
        let _ = a.sample(0, 0).unwrap();
        assert_eq!(a.sample(2, 1).unwrap(), b.sample(2, 1).unwrap());
    }

    #[test]
    fn deterministic_rows_are_never_left() {
        let mdp = make_m_r(0.4, 0.2).unwrap();
        let mut gm = GenerativeModel::new(&mdp, 1);
        let mut store = SampleStore::for_model(&gm);
        collect_uniform(&mut gm, &mut store, 500).unwrap();
        assert_eq!(store.next_counts(0, 1), &[0, 0, 500]);
        assert_eq!(store.next_counts(1, 0), &[500, 0, 0]);
        assert!(store.check_invariants());
        assert_eq!(store.total(), 3000);
        assert_eq!(gm.samples_drawn(), 3000);
    }

    #[test]
    fn out_of_range_pair_is_an_error() {
        let mdp = make_m_r(0.4, 0.2).unwrap();
        let mut gm = GenerativeModel::new(&mdp, 1);
        assert!(gm.sample(3, 0).is_err());
    }

    #[test]
    fn unvisited_pair_has_uniform_row() {
        let store = SampleStore::new(4, 1);
        assert_eq!(store.empirical_row(0, 0), vec![0.25; 4]);
    }
}
