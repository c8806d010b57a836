//! Diameter-free exploration end to end: no span bound is supplied.

use avgmdp::dfe::{run_dfe, DfeConfig};
use avgmdp::instances::make_m_r;
use avgmdp::mdp::{exact_diameter, optimal_gain_bias, policy_gain_via_stationary};
use avgmdp::sampling::GenerativeModel;

fn main() -> avgmdp::Result<()> {
    let mdp = make_m_r(0.4, 0.2)?;
    let gain = optimal_gain_bias(&mdp)?.gain_bias.gain;
    println!("exact diameter {:.4}", exact_diameter(&mdp)?);
    for seed in 0..5 {
        let mut gm = GenerativeModel::new(&mdp, seed);
        let out = run_dfe(&mut gm, 0.1, 0.1, &DfeConfig::default(), seed, None)?;
        let worst = policy_gain_via_stationary(&mdp, &out.policy).into_iter().fold(f64::INFINITY, f64::min);
        println!(
            "seed {seed}: d_hat={:.3} samples={} (diameter {}, planner {}) gap={:.3e}",
            out.d_hat,
            out.tau,
            out.tau_diameter,
            out.tau_planner,
            gain - worst
        );
    }
    Ok(())
}
