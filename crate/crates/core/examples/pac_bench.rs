//! Runs a small seeded benchmark from a TOML config and prints the summary.
//!
//! `cargo run --example pac_bench -- path/to/config.toml`

use avgmdp::experiments::{run_bench, summary, write_records, ExperimentConfig};

fn main() -> avgmdp::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/dfe_scaling.toml").into());
    let cfg = ExperimentConfig::load(path.as_ref())?;
    let records = run_bench(&cfg, 1, false)?;
    write_records(std::io::stdout(), &records[..records.len().min(3)])?;
    print!("{}", summary(&records));
    Ok(())
}
