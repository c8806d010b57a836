//! Uniform sampling with a data-dependent stopping rule, compared with the
//! instance-dependent worst-case sample bound.

use avgmdp::instances::make_m_r;
use avgmdp::mdp::DEFAULT_POLICY_CAP;
use avgmdp::sampling::GenerativeModel;
use avgmdp::stopping::{run_uniform_adaptive, sample_complexity_bound, BoundMode, StoppingConfig};

fn main() -> avgmdp::Result<()> {
    let mdp = make_m_r(0.4, 0.5)?;
    for mode in [BoundMode::Pinsker, BoundMode::ExactKl] {
        let cfg = StoppingConfig { mode, ..StoppingConfig::new(0.2, 0.1) };
        let mut gm = GenerativeModel::new(&mdp, 1);
        let out = run_uniform_adaptive(&mut gm, &cfg, None)?;
        println!(
            "{mode:?}: stopped={} tau={} rounds={} width={:.4} policy={:?}",
            out.stopped(),
            out.tau,
            out.rounds,
            out.final_width,
            out.policy.as_ref().map(|p| p.actions().to_vec())
        );
        let step = (out.diagnostics.len() / 5).max(1);
        for d in out.diagnostics.iter().step_by(step) {
            println!("  round {:>6} samples {:>8} width {:.4}", d.round, d.samples, d.width);
        }
    }
    let bound = sample_complexity_bound(&mdp, 0.2, 0.1, DEFAULT_POLICY_CAP)?;
    println!("worst-case bound {:.4e} (gap {:.4}, sensitivity {:.3})", bound.bound, bound.gain_gap, bound.sensitivity);
    Ok(())
}
