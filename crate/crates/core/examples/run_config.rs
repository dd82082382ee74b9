//! Run a TOML scenario (or a built-in one) and write series.csv,
//! final_field.csv and summary.json.
//!
//! cargo run --release --example run_config -- free_gaussian /tmp/out

use coulomb_nls::config::parse_config;
use coulomb_nls::runner::{run_scenario_with, scenario, RunOptions};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let which = args.next().unwrap_or_else(|| "free_gaussian".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/example".into()));
    let cfg = match scenario(&which) {
        Some(cfg) => cfg,
        None => parse_config(&std::fs::read_to_string(&which)?)?,
    };
    let art = run_scenario_with(&cfg, &RunOptions { out_dir: out, base_dir: ".".into() })?;
    println!("{}", serde_json::to_string_pretty(&art.summary)?);
    println!("wrote {}", art.dir.display());
    Ok(())
}
