use avgmdp::diameter::{
    confidence_radius, diameter_upper_estimate, estimate_diameter, evi_ssp, l1_ball_min, required_samples,
    required_samples_upper_bound, ConfidenceSetL1, DiameterOptions, EviOptions,
};
use avgmdp::instances::{make_m_r, make_random_communicating};
use avgmdp::mdp::{exact_diameter, hitting_times, HittingOptions};
use avgmdp::sampling::{GenerativeModel, SampleStore};
use avgmdp::{Error, Kernel, TabularMdp};

#[test]
fn radius_is_strictly_decreasing() {
    let mut prev = f64::INFINITY;
    for n in 1..=1_000_000u64 {
        let b = confidence_radius(n, 0.1, 3, 2);
        assert!(b < prev, "n = {n}");
        prev = b;
    }
}

#[test]
fn radius_matches_closed_form() {
    // independent evaluation: log(SA/delta) and (S-1) log(e (1 + n/(S-1)))
    let (n, delta, s, a) = (100.0f64, 0.1f64, 3.0f64, 2.0f64);
    let x = (s * a / delta).ln() + (s - 1.0) * (1.0 + (1.0 + n / (s - 1.0)).ln());
    let want = (2.0 * x / n).sqrt();
    assert!((confidence_radius(100, 0.1, 3, 2) - want).abs() < 1e-14);
    // frozen from a 40-digit evaluation
    assert!((want - 0.528_355_861_662_776_5).abs() < 1e-15);
    assert!(confidence_radius(100, 0.5, 3, 2) < confidence_radius(100, 0.1, 3, 2));
}

#[test]
fn halving_eta_at_least_doubles_the_sample_size() {
    for eta in [0.8, 0.4, 0.2, 0.1, 0.05] {
        let n = required_samples(0.1, eta, 4, 2).unwrap();
        let m = required_samples(0.1, eta / 2.0, 4, 2).unwrap();
        assert!(m >= 2 * n, "{eta}: {n} -> {m}");
        assert!(required_samples_upper_bound(0.1, eta, 4, 2) >= n as f64);
    }
}

#[test]
fn l1_ball_minimum_matches_grid() {
    let center = [0.2, 0.5, 0.3];
    let v = [3.0, -1.0, 2.0];
    let radius = 0.4;
    let (value, _) = l1_ball_min(&center, &v, radius);
    let k = 1000;
    let mut best = f64::INFINITY;
    for i in 0..=k {
        for j in 0..=(k - i) {
            let q = [i as f64 / k as f64, j as f64 / k as f64, (k - i - j) as f64 / k as f64];
            let dist: f64 = q.iter().zip(&center).map(|(a, b)| (a - b).abs()).sum();
            if dist <= radius + 1e-12 {
                best = best.min(q.iter().zip(&v).map(|(a, b)| a * b).sum());
            }
        }
    }
    assert!((value - best).abs() < 1e-2, "{value} vs {best}");
    assert!(value <= best + 1e-12);
}

#[test]
fn zero_radius_evi_recovers_hitting_times() {
    let mdp = make_random_communicating(4, 2, 21).unwrap();
    let sets: Vec<ConfidenceSetL1> = (0..8)
        .map(|i| ConfidenceSetL1 { center: mdp.row(i / 2, i % 2).to_vec(), radius: 0.0 })
        .collect();
    let mu = 1e-6;
    for goal in 0..4 {
        let truth = hitting_times(mdp.kernel(), goal, &HittingOptions::default()).unwrap();
        let evi = evi_ssp(&[1.0; 8], goal, &sets, 4, 2, &EviOptions { mu_vi: mu, max_iterations: 1_000_000 }).unwrap();
        assert_eq!(evi.value[goal], 0.0);
        for s in 0..4 {
            assert!(evi.value[s] <= truth[s] + 1e-12);
            // value-iteration error is at most mu times the contraction horizon
            assert!(truth[s] - evi.value[s] <= mu * 1e3 * truth[s].max(1.0));
        }
    }
}

#[test]
fn evi_on_improper_sets_hits_the_cap() {
    // state 1 can never reach the goal
    let k = Kernel::new(2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let sets: Vec<ConfidenceSetL1> =
        (0..2).map(|s| ConfidenceSetL1 { center: k.row(s, 0).to_vec(), radius: 0.0 }).collect();
    let res = evi_ssp(&[1.0, 1.0], 0, &sets, 2, 1, &EviOptions { mu_vi: 0.5, max_iterations: 100 });
    assert!(matches!(res, Err(Error::IterationCap { .. })));
}

fn cycle() -> TabularMdp {
    let k = Kernel::new(2, 1, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    TabularMdp::new(k, vec![0.0, 1.0]).unwrap()
}

#[test]
fn deterministic_cycle_bracket() {
    let mdp = cycle();
    for seed in 0..20 {
        let mut gm = GenerativeModel::new(&mdp, seed);
        let mut store = SampleStore::for_model(&gm);
        let est = estimate_diameter(&mut gm, &mut store, 0.5, 0.1, &DiameterOptions::default(), None).unwrap();
        assert!(est.d_hat >= 1.0 && est.d_hat <= 1.375 * 1.5 + 1e-12, "{}", est.d_hat);
    }
}

#[test]
fn round_count_and_final_sample_size() {
    let (eps, delta) = (1.0, 0.1);
    for (mdp, seeds) in [(make_m_r(0.4, 0.2).unwrap(), 50), (make_random_communicating(5, 2, 7).unwrap(), 50)] {
        let d = exact_diameter(&mdp).unwrap();
        let cap = required_samples(delta, eps / (8.0 * d), 5.max(mdp.num_states()), mdp.num_actions()).unwrap();
        let cap = cap.max(required_samples(delta, eps / (8.0 * d), mdp.num_states(), mdp.num_actions()).unwrap());
        for seed in 0..seeds {
            let mut gm = GenerativeModel::new(&mdp, seed);
            let mut store = SampleStore::for_model(&gm);
            let est = estimate_diameter(&mut gm, &mut store, eps, delta, &DiameterOptions::default(), None).unwrap();
            if est.d_hat < d {
                continue;
            }
            assert!(est.rounds.len() as f64 <= d.log2().ceil() + 1.0);
            assert!(store.min_count() <= cap, "{} > {cap}", store.min_count());
            assert_eq!(est.samples_used, store.total());
        }
    }
}

#[test]
fn fresh_samples_mode_uses_at_least_as_many_samples() {
    let mdp = make_m_r(0.4, 0.2).unwrap();
    let run = |fresh| {
        let mut gm = GenerativeModel::new(&mdp, 3);
        let mut store = SampleStore::for_model(&gm);
        let opts = DiameterOptions { fresh_samples: fresh, ..DiameterOptions::default() };
        estimate_diameter(&mut gm, &mut store, 1.0, 0.1, &opts, None).unwrap()
    };
    assert!(run(true).samples_used >= run(false).samples_used);
}

#[test]
fn round_log_is_delimited_text() {
    let mdp = make_m_r(0.4, 0.2).unwrap();
    let mut gm = GenerativeModel::new(&mdp, 0);
    let mut store = SampleStore::for_model(&gm);
    let mut log = Vec::new();
    let est = estimate_diameter(&mut gm, &mut store, 1.0, 0.1, &DiameterOptions::default(), Some(&mut log)).unwrap();
    let text = String::from_utf8(log).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), est.rounds.len() + 1);
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    assert_eq!(last.len(), rows[0].split(',').count());
}

#[test]
fn upper_estimate_inflates_the_value() {
    let v = 5.0;
    assert!(diameter_upper_estimate(v, 0.1, 1.0) > v);
    assert!(diameter_upper_estimate(v, 0.0, 1e-9) >= v);
}
