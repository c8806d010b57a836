//! Estimates the diameter from a generative model and prints the round log.

use avgmdp::diameter::{estimate_diameter, DiameterOptions};
use avgmdp::instances::make_m_r;
use avgmdp::mdp::exact_diameter;
use avgmdp::sampling::{GenerativeModel, SampleStore};

fn main() -> avgmdp::Result<()> {
    let mdp = make_m_r(0.4, 0.2)?;
    let truth = exact_diameter(&mdp)?;
    let mut gm = GenerativeModel::new(&mdp, 2024);
    let mut store = SampleStore::for_model(&gm);
    let mut log = std::io::stdout();
    let est = estimate_diameter(&mut gm, &mut store, 0.5, 0.1, &DiameterOptions::default(), Some(&mut log))?;
    println!("exact diameter {truth:.4}");
    println!("estimate {:.4} ({:.2}x) from {} samples", est.d_hat, est.d_hat / truth, est.samples_used);
    Ok(())
}
