//! Runs the planner with a known span bound and scores the returned policy.

use avgmdp::instances::make_random_communicating;
use avgmdp::mdp::{optimal_gain_bias, policy_gain_via_stationary};
use avgmdp::planner::{plan_with_span_bound, sample_budget, PlannerConfig};
use avgmdp::sampling::{GenerativeModel, SampleStore};

fn main() -> avgmdp::Result<()> {
    let mdp = make_random_communicating(4, 2, 3)?;
    let opt = optimal_gain_bias(&mdp)?;
    let span = opt.gain_bias.span;
    for eps in [0.4, 0.2, 0.1] {
        let cfg = PlannerConfig::new(eps, span, 0.1);
        let mut gm = GenerativeModel::new(&mdp, 9);
        let mut store = SampleStore::for_model(&gm);
        let out = plan_with_span_bound(&mut gm, &mut store, &cfg, 9, false)?;
        let worst = policy_gain_via_stationary(&mdp, &out.policy).into_iter().fold(f64::INFINITY, f64::min);
        println!(
            "eps={eps:<4} discount={:.5} per_pair={} (formula {}) gap={:.2e} policy={:?}",
            out.gamma,
            out.per_pair,
            sample_budget(eps, span, 0.1, 1.0, 4, 2),
            opt.gain_bias.gain - worst,
            out.policy.actions()
        );
    }
    Ok(())
}
