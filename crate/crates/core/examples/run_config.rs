//! Runs a TOML experiment the way the CLI does and prints the JSON report.
//!
//! cargo run --release --example run_config -- experiments/hull_disk.toml

use hull_lab::cli::{run_experiment, ExperimentConfig};

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/experiments/hull_disk.toml").into());
    let src = std::fs::read_to_string(&path)?;
    let cfg = ExperimentConfig::parse(&src).map_err(|e| anyhow::anyhow!("{path}:{e}"))?;
    let outcome = run_experiment(&cfg, 1)?;
    println!("{}", serde_json::to_string_pretty(&outcome.report)?);
    Ok(())
}
