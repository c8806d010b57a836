//! Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Tolerances and trial counts are pinned below.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use avgmdp::diameter::{confidence_radius, estimate_diameter, evi_ssp, ConfidenceSetL1, DiameterOptions, EviOptions};
use avgmdp::experiments::{run_bench, scaling_slope, within_three_sigma, ExperimentConfig};
use avgmdp::instances::{make_m_j, make_m_pp, make_m_r, make_m_r_ergodic, make_random_communicating, oracle};
use avgmdp::mdp::{
    compute_constants, exact_diameter, hitting_times, optimal_gain_bias, policy_gain_bias, policy_is_unichain,
    poisson_residual, HittingOptions, DEFAULT_POLICY_CAP,
};
use avgmdp::sampling::{collect_uniform, simulate_policy, GenerativeModel, SampleStore};
use avgmdp::stopping::{
    kl_divergence, kl_ucb_linear, pinsker_bounds, run_uniform_adaptive, sample_complexity_bound, threshold,
    StoppingConfig,
};
use avgmdp::{DeterministicPolicy, Kernel, TabularMdp};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// M_R spans below and above one half, and the span gap construction.
fn oracle_m_r() -> Verdict {
    const TOL: f64 = 1e-9;
    let mut worst: f64 = 0.0;
    for &(r, p) in &[(0.4, 0.2), (0.3, 0.5), (0.45, 0.05)] {
        let sol = optimal_gain_bias(&make_m_r(r, p).unwrap()).unwrap();
        worst = worst.max((sol.gain_bias.span - 0.5).abs());
    }
    for &(eps, p) in &[(0.1, 0.2), (0.05, 0.5), (0.2, 0.1)] {
        let sol = optimal_gain_bias(&make_m_r(0.5 + eps, p).unwrap()).unwrap();
        worst = worst.max((sol.gain_bias.span - (0.5 + eps) * (1.0 + p) / p).abs());
    }
    let mut gap_err: f64 = 0.0;
    for &(eps, gap) in &[(0.1, 1.0), (0.05, 2.0), (0.2, 5.0)] {
        let p = oracle::m_r_gap_prob(eps, gap);
        let low = optimal_gain_bias(&make_m_r(0.5 - eps, p).unwrap()).unwrap().gain_bias.span;
        let high = optimal_gain_bias(&make_m_r(0.5 + eps, p).unwrap()).unwrap().gain_bias.span;
        gap_err = gap_err.max((high - low - gap).abs());
    }
    verdict(worst <= TOL && gap_err <= TOL, format!("max span error {worst:.2e}, max gap error {gap_err:.2e}"))
}

/// Combination-lock gain, bias, span and diameter.
fn oracle_m_j() -> Verdict {
    const TOL: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ok_gain = true;
    let mut ok_bias = true;
    let mut ok_span = true;
    let mut ok_diam = true;
    let mut notes = Vec::new();
    for states in [4usize, 5] {
        let actions = 4;
        let j: Vec<usize> = (0..states - 1).map(|_| rng.random_range(0..actions)).collect();
        let mdp = make_m_j(states, actions, 0.1, &j).unwrap();
        let p = avgmdp::instances::m_j_escape_prob(states, actions, 0.1).unwrap();
        let sol = optimal_gain_bias(&mdp).unwrap();
        let g = 1.0 / (1.0 + p * (states as f64 - 1.0));
        ok_gain &= close(sol.gain_bias.gain, g, TOL);
        // lock start (state 1) pinned to zero: b = (S-1) g at the paying
        // state, (k - 1) g at lock position k
        let b = &sol.gain_bias.bias;
        let shift = b[1];
        for (k, &bk) in b.iter().enumerate() {
            let want = if k == 0 { (states as f64 - 1.0) * g } else { (k as f64 - 1.0) * g };
            ok_bias &= close(bk - shift, want, TOL);
        }
        ok_span &= sol.gain_bias.span <= states as f64;
        let d = exact_diameter(&mdp).unwrap();
        let claimed = 1.0 / p + states as f64 - 1.0;
        let hit = close(d, claimed, TOL * claimed);
        ok_diam &= hit;
        notes.push(format!("S={states}: D={d:.6} vs claimed {claimed:.6}"));
    }
    verdict(
        ok_gain && ok_bias && ok_span && ok_diam,
        format!("gain {ok_gain}, bias {ok_bias}, span<=S {ok_span}, diameter {ok_diam} [{}]", notes.join("; ")),
    )
}

/// Monte-Carlo occupancy of the paying state against the Cesaro average of
/// the closed-form return probability.
fn occupancy_m_pp() -> Verdict {
    let (p, pp) = (0.1, 0.02);
    let steps = 10_000;
    let replicates = 100;
    let mdp = make_m_pp(p, pp).unwrap();
    let policy = DeterministicPolicy::constant(3, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fractions: Vec<f64> = (0..replicates)
        .map(|_| {
            let path = simulate_policy(mdp.kernel(), &policy, 0, steps, &mut rng);
            path[..steps].iter().filter(|&&s| s == 0).count() as f64 / steps as f64
        })
        .collect();
    let mean = fractions.iter().sum::<f64>() / replicates as f64;
    let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (replicates as f64 - 1.0);
    let sigma = (var / replicates as f64).sqrt();
    let expected = (0..steps).map(|t| oracle::m_pp_occupancy(p, pp, t as u32)).sum::<f64>() / steps as f64;
    verdict(
        (mean - expected).abs() <= 3.0 * sigma,
        format!("mean {mean:.5} vs closed form {expected:.5}, sigma {sigma:.2e}"),
    )
}

fn corpus() -> Vec<(String, TabularMdp)> {
    let mut out = vec![
        ("MR(0.4,0.2)".to_string(), make_m_r(0.4, 0.2).unwrap()),
        ("MR(0.6,0.2)".to_string(), make_m_r(0.6, 0.2).unwrap()),
        ("MR_ERGODIC(0.4,0.2,0.1)".to_string(), make_m_r_ergodic(0.4, 0.2, 0.1).unwrap()),
        ("MPP(0.1,0.02)".to_string(), make_m_pp(0.1, 0.02).unwrap()),
        ("MJ(4,4)".to_string(), make_m_j(4, 4, 0.1, &[1, 3, 0]).unwrap()),
        ("MJ(5,4)".to_string(), make_m_j(5, 4, 0.1, &[2, 0, 3, 1]).unwrap()),
    ];
    for (s, a, seed) in [(5, 2, 1), (4, 4, 2), (6, 4, 3), (3, 3, 4)] {
        out.push((format!("RANDOM({s},{a},{seed})"), make_random_communicating(s, a, seed).unwrap()));
    }
    out
}

fn poisson_residuals() -> Verdict {
    const TOL: f64 = 1e-9;
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for (_, mdp) in corpus() {
        assert!(mdp.policy_count().is_some_and(|c| c <= 4096));
        for policy in DeterministicPolicy::enumerate(mdp.num_states(), mdp.num_actions()) {
            if !policy_is_unichain(mdp.kernel(), &policy) {
                continue;
            }
            let gb = policy_gain_bias(&mdp, &policy).unwrap();
            worst = worst.max(poisson_residual(&mdp, &policy, &gb));
            checked += 1;
        }
    }
    verdict(worst <= TOL, format!("{checked} unichain policies, max residual {worst:.2e}"))
}

fn diameter_bracket() -> Verdict {
    let seeds = 500u64;
    let delta = 0.1;
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, mdp) in [
        ("MR(0.4,0.2)", make_m_r(0.4, 0.2).unwrap()),
        ("RANDOM(5,2,7)", make_random_communicating(5, 2, 7).unwrap()),
    ] {
        let d = exact_diameter(&mdp).unwrap();
        let mut failures = 0;
        for seed in 0..seeds {
            let mut gm = GenerativeModel::new(&mdp, seed);
            let mut store = SampleStore::for_model(&gm);
            let est = estimate_diameter(&mut gm, &mut store, 1.0, delta, &DiameterOptions::default(), None).unwrap();
            if !avgmdp::experiments::diameter_bracket_holds(d, est.d_hat) {
                failures += 1;
            }
        }
        pass &= within_three_sigma(failures, seeds as usize, delta);
        notes.push(format!("{name}: D={d:.4}, {failures}/{seeds} outside [D, 4D]"));
    }
    verdict(pass, notes.join("; "))
}

fn evi_optimism() -> Verdict {
    let delta = 0.1;
    let per_pair = 40;
    let mut violations = 0;
    let mut contained = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for seed in 0..200u64 {
        let mdp = make_random_communicating(4, 2, 1000 + seed).unwrap();
        let (n_s, n_a) = (4, 2);
        let mut gm = GenerativeModel::new(&mdp, seed);
        let mut store = SampleStore::for_model(&gm);
        collect_uniform(&mut gm, &mut store, per_pair).unwrap();
        let radius = confidence_radius(per_pair, delta, n_s, n_a);
        let sets: Vec<ConfidenceSetL1> = (0..n_s)
            .flat_map(|s| (0..n_a).map(move |a| (s, a)))
            .map(|(s, a)| ConfidenceSetL1 { center: store.empirical_row(s, a), radius })
            .collect();
        let holds = (0..n_s * n_a).all(|i| sets[i].contains(mdp.kernel().row(i / n_a, i % n_a)));
        if !holds {
            continue;
        }
        contained += 1;
        let costs = vec![1.0; n_s * n_a];
        for goal in 0..n_s {
            let truth = hitting_times(mdp.kernel(), goal, &HittingOptions::default()).unwrap();
            let opts = EviOptions { mu_vi: 1e-3, max_iterations: 1_000_000 };
            let evi = evi_ssp(&costs, goal, &sets, n_s, n_a, &opts).unwrap();
            for s in 0..n_s {
                let excess = evi.value[s] - truth[s];
                worst_excess = worst_excess.max(excess);
                if excess > 1e-9 * (1.0 + truth[s]) {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        violations == 0 && contained > 0,
        format!("{contained}/200 trials with containment, {violations} violations, max excess {worst_excess:.2e}"),
    )
}

/// Exact grid maximum of `q . b` over `{q on the 2e-4 grid : KL(p || q) <= budget}`.
///
/// For fixed `q0` the objective is linear in `q1` and KL is convex in it, so
/// the feasible `q1` form a run of grid points around the constrained
/// minimiser; a binary search finds the run's end on the better side.
fn kl_grid_max(p: &[f64; 3], b: &[f64; 3], budget: f64) -> f64 {
    const K: usize = 5000;
    let h = 1.0 / K as f64;
    let kl = |i: usize, j: usize| {
        let q = [i as f64 * h, j as f64 * h, (K - i - j) as f64 * h];
        kl_divergence(p, &q)
    };
    let value = |i: usize, j: usize| i as f64 * h * b[0] + j as f64 * h * b[1] + (K - i - j) as f64 * h * b[2];
    let mut best = f64::NEG_INFINITY;
    for i in 0..=K {
        let rest = K - i;
        // constrained minimiser of KL in q1 given q0
        let tail = p[1] + p[2];
        let centre = if tail > 0.0 { rest as f64 * p[1] / tail } else { 0.0 };
        let lo_c = (centre.floor() as usize).min(rest);
        let hi_c = (centre.ceil() as usize).min(rest);
        let start = if kl(i, lo_c) <= kl(i, hi_c) { lo_c } else { hi_c };
        if kl(i, start) > budget {
            continue;
        }
        // last feasible index moving away from `start` towards the better end
        let mut good = start as isize;
        let mut bad = if b[1] >= b[2] { rest as isize + 1 } else { -1 };
        while (bad - good).abs() > 1 {
            let mid = (good + bad) / 2;
            if kl(i, mid as usize) <= budget {
                good = mid;
            } else {
                bad = mid;
            }
        }
        best = best.max(value(i, good as usize));
    }
    best
}

fn kl_ball_oracle() -> Verdict {
    const TOL: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_gap: f64 = 0.0;
    let mut pinsker_violations = 0;
    for t in 0..500 {
        let mut p = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        if t % 5 == 0 {
            p[t / 5 % 3] = 0.0;
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let b = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let budget = 10f64.powf(rng.random_range(-3.0..0.0));
        let ucb = kl_ucb_linear(&p, &b, budget);
        let grid = kl_grid_max(&p, &b, budget);
        worst_gap = worst_gap.max((ucb - grid).abs());
        let (pinsker, _) = pinsker_bounds(&p, &b, 1, budget);
        if ucb > pinsker + 1e-12 {
            pinsker_violations += 1;
        }
    }
    verdict(
        worst_gap <= TOL && pinsker_violations == 0,
        format!("max |ucb - grid| {worst_gap:.2e}, {pinsker_violations} Pinsker violations"),
    )
}

/// Runs the stopping rule while auditing the per-pair KL concentration
/// event against the hidden kernel; returns (stopped, gap, event held, tau).
fn audited_stopping(mdp: &TabularMdp, cfg: &StoppingConfig, seed: u64, g_star: f64) -> (bool, f64, bool, u64) {
    let (n_s, n_a) = (mdp.num_states(), mdp.num_actions());
    let mut gm = GenerativeModel::new(mdp, seed);
    let mut held = true;
    let mut audit = |_: u64, store: &SampleStore| {
        if !held {
            return;
        }
        for s in 0..n_s {
            for a in 0..n_a {
                let n = store.count(s, a);
                let kl = kl_divergence(&store.empirical_row(s, a), mdp.kernel().row(s, a));
                if n as f64 * kl > threshold(cfg.delta, n as f64, n_s, n_a) {
                    held = false;
                }
            }
        }
    };
    let out = run_uniform_adaptive(&mut gm, cfg, Some(&mut audit)).unwrap();
    let gap = out
        .policy
        .as_ref()
        .map(|p| {
            let gains = avgmdp::mdp::policy_gain_via_stationary(mdp, p);
            g_star - gains.iter().cloned().fold(f64::INFINITY, f64::min)
        })
        .unwrap_or(0.0);
    (out.stopped(), gap, held, out.tau)
}

fn stopping_pac() -> Verdict {
    let (eps, delta) = (0.2, 0.1);
    let seeds = 1000u64;
    let mdp = make_m_r(0.4, 0.5).unwrap();
    let g_star = optimal_gain_bias(&mdp).unwrap().gain_bias.gain;
    let cfg = StoppingConfig::new(eps, delta);
    let mut failures = 0;
    let mut event_failures = 0;
    let mut event_trials = 0;
    let mut unstopped = 0;
    for seed in 0..seeds {
        let (stopped, gap, held, _) = audited_stopping(&mdp, &cfg, seed, g_star);
        let failed = stopped && gap > eps + avgmdp::experiments::SUCCESS_SLACK;
        failures += failed as usize;
        unstopped += (!stopped) as usize;
        if held {
            event_trials += 1;
            event_failures += failed as usize;
        }
    }
    verdict(
        within_three_sigma(failures, seeds as usize, delta) && event_failures == 0,
        format!(
            "{failures}/{seeds} failures, {unstopped} not stopped, {event_failures} failures among {event_trials} trials on the concentration event"
        ),
    )
}

/// Two-state, two-action ergodic instance where every constant is exact.
fn ceiling_instance() -> TabularMdp {
    let kernel = Kernel::new(2, 2, vec![0.7, 0.3, 0.2, 0.8, 0.6, 0.4, 0.1, 0.9]).unwrap();
    TabularMdp::new(kernel, vec![0.8, 0.3, 0.1, 0.0]).unwrap()
}

fn complexity_ceiling() -> Verdict {
    let mdp = ceiling_instance();
    let delta = 0.1;
    let constants = compute_constants(&mdp, DEFAULT_POLICY_CAP).unwrap();
    let g_star = constants.optimal_gain;
    let gap = constants.gain_gap;
    let mut worst_ratio: f64 = 0.0;
    let mut runs = 0;
    let mut pass = true;
    for eps in [gap, gap / 2.0] {
        let bound = sample_complexity_bound(&mdp, eps, delta, DEFAULT_POLICY_CAP).unwrap().bound;
        let cfg = StoppingConfig::new(eps, delta);
        for seed in 0..200 {
            let (stopped, _, _, tau) = audited_stopping(&mdp, &cfg, seed, g_star);
            runs += 1;
            pass &= stopped && (tau as f64) <= bound;
            worst_ratio = worst_ratio.max(tau as f64 / bound);
        }
    }
    verdict(pass, format!("gain gap {gap:.4}, {runs} runs, max tau/bound {worst_ratio:.2e}"))
}

fn dfe_scaling() -> Verdict {
    let cfg = ExperimentConfig::from_toml(
        "algorithm = \"dfe\"\nseeds = 20\neps = [0.4, 0.2, 0.1, 0.05]\ndelta = 0.1\nc2 = 1.0\n\
         [instance]\nfamily = \"MR\"\nr = 0.4\np = 0.2\n",
    )
    .unwrap();
    let records = run_bench(&cfg, 1, false).unwrap();
    let slope = scaling_slope(&records).unwrap();
    let failures = records.iter().filter(|r| !r.success).count();
    verdict((1.7..=2.3).contains(&slope), format!("slope {slope:.4}, {failures}/{} failures", records.len()))
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.toml");
    std::fs::write(
        &config,
        "algorithm = \"stopping\"\nseeds = 12\neps = [0.3, 0.2]\ndelta = 0.1\n\
         [instance]\nfamily = \"RANDOM\"\nstates = 3\nactions = 2\nseed = 5\n",
    )
    .unwrap();
    let mut outputs = Vec::new();
    for (i, workers) in [1, 3].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_avgmdp"))
            .args(["bench", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--workers", &workers.to_string()])
            .output()
            .unwrap();
        if !status.status.success() {
            return verdict(false, format!("bench exited with {}", status.status));
        }
        let text = std::fs::read_to_string(&out).unwrap();
        // drop the trailing timing column
        let stripped: Vec<String> =
            text.lines().map(|l| l.rsplit_once(',').map(|(head, _)| head.to_string()).unwrap_or_default()).collect();
        outputs.push(stripped.join("\n"));
    }
    verdict(
        outputs[0] == outputs[1],
        format!("{} result lines, identical across 1 and 3 workers: {}", outputs[0].lines().count(), outputs[0] == outputs[1]),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, Duration, fn() -> Verdict)> = vec![
        ("hard-instance span oracle", Duration::from_secs(1), oracle_m_r),
        ("combination-lock oracle", Duration::from_secs(10), oracle_m_j),
        ("slow-mixing occupancy", Duration::from_secs(10), occupancy_m_pp),
        ("Poisson residual", Duration::from_secs(60), poisson_residuals),
        ("diameter estimate bracket", Duration::from_secs(600), diameter_bracket),
        ("EVI optimism", Duration::from_secs(120), evi_optimism),
        ("KL-ball grid oracle", Duration::from_secs(120), kl_ball_oracle),
        ("stopping rule PAC", Duration::from_secs(1800), stopping_pac),
        ("sample-complexity ceiling", Duration::from_secs(600), complexity_ceiling),
        ("DFE scaling slope", Duration::from_secs(1800), dfe_scaling),
        ("bench determinism", Duration::from_secs(300), determinism),
    ];
    let mut all = true;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let clock = Instant::now();
        let v = run();
        let elapsed = clock.elapsed();
        let pass = v.pass && elapsed <= limit;
        all &= pass;
        println!(
            "criterion {:>2} {:<28} {} ({}; {:.2}s of {}s)",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
