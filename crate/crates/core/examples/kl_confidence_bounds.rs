//! KL and Pinsker confidence bounds on a linear functional of a
//! distribution, with the L1 ball used by the diameter phase.

use avgmdp::diameter::{confidence_radius, l1_ball_min, required_samples};
use avgmdp::stopping::{kl_lcb_linear, kl_ucb_linear, pinsker_bounds, threshold};

fn main() -> avgmdp::Result<()> {
    let p = [0.5, 0.3, 0.2];
    let b = [0.0, 1.0, 2.5];
    for n in [10u64, 100, 1000, 10_000] {
        let x = threshold(0.1, n as f64, 3, 2);
        let budget = x / n as f64;
        let (pu, pl) = pinsker_bounds(&p, &b, n, x);
        println!(
            "n={n:<6} threshold={x:.3} kl=[{:.4}, {:.4}] pinsker=[{:.4}, {:.4}]",
            kl_lcb_linear(&p, &b, budget),
            kl_ucb_linear(&p, &b, budget),
            pl,
            pu
        );
    }
    let radius = confidence_radius(500, 0.1, 3, 2);
    let (value, q) = l1_ball_min(&p, &b, radius);
    println!("L1 radius at n=500: {radius:.4}; minimiser {q:.4?} value {value:.4}");
    println!("samples for radius 0.05: {}", required_samples(0.1, 0.05, 3, 2)?);
    Ok(())
}
