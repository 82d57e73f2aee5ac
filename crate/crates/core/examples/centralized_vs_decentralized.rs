//! Runs the baseline scenario under both solvers with shared seeds.
//!
//! `cargo run --release --example centralized_vs_decentralized [runs]`

use std::path::Path;

use evcharge::config;
use evcharge::metrics::compare_solvers;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let runs: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20);
    let cfg = config::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/baseline.toml"), &[])?;
    let c = compare_solvers(&cfg, runs, cfg.monte_carlo.base_seed)?;
    println!("runs            {}", c.runs);
    println!("centralized     i_ct {:.2} min  i_ep {:.4} EUR/kWh  i_d {:.3}", c.centralized.i_ct_min, c.centralized.i_ep_eur_per_kwh, c.centralized.i_d);
    println!("decentralized   i_ct {:.2} min  i_ep {:.4} EUR/kWh  i_d {:.3}", c.decentralized.i_ct_min, c.decentralized.i_ep_eur_per_kwh, c.decentralized.i_d);
    println!("ratio           {:.3}", c.ratio);
    println!("series rmse     {:.3} min", c.rmse_min);
    println!("mean wait       {:.4} steps over {} assignments", c.mean_wait_steps, c.assignments);
    Ok(())
}
