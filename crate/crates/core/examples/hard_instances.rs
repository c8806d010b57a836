//! Builds the benchmark families and prints their exact constants.

use avgmdp::instances::{m_j_escape_prob, make_m_j, make_m_pp, make_m_r, make_m_r_ergodic, make_random_communicating};
use avgmdp::mdp::{compute_constants, exact_diameter, optimal_gain_bias, DEFAULT_POLICY_CAP};
use avgmdp::TabularMdp;

fn describe(name: &str, mdp: &TabularMdp) -> avgmdp::Result<()> {
    let opt = optimal_gain_bias(mdp)?;
    let d = exact_diameter(mdp)?;
    let c = compute_constants(mdp, DEFAULT_POLICY_CAP)?;
    println!(
        "{name:<16} S={} A={} gain={:.6} span={:.4} diameter={:.4} gap={:.4} sensitivity={:.3} policy={:?}",
        mdp.num_states(),
        mdp.num_actions(),
        opt.gain_bias.gain,
        opt.gain_bias.span,
        d,
        c.gain_gap,
        c.sensitivity,
        opt.policy.actions()
    );
    Ok(())
}

fn main() -> avgmdp::Result<()> {
    describe("reward(0.4,0.2)", &make_m_r(0.4, 0.2)?)?;
    describe("ergodic(0.4,0.2)", &make_m_r_ergodic(0.4, 0.2, 0.1)?)?;
    describe("periodic(0.3,0.6)", &make_m_pp(0.3, 0.6)?)?;
    describe("random(5,2,7)", &make_random_communicating(5, 2, 7)?)?;

    let lock = make_m_j(4, 3, 0.1, &[2, 0, 1])?;
    let p = m_j_escape_prob(4, 3, 0.1)?;
    describe("lock(4,3)", &lock)?;
    println!("lock escape probability {p:.6}, closed-form gain {:.6}", 1.0 / (1.0 + 3.0 * p));
    Ok(())
}
