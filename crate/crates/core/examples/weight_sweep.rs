//! Sweeps the preference simplex and prints the three indices per point.
//!
//! `cargo run --release --example weight_sweep [divisions] [runs]`

use std::path::Path;

use evcharge::config;
use evcharge::metrics::weight_sweep;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let divisions: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);
    let runs: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let cfg = config::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/sweep.toml"), &[])?;
    let rows = weight_sweep(&cfg, divisions, runs, cfg.monte_carlo.base_seed)?;
    println!("a_time a_price a_dist    i_ct   i_ep    i_d");
    for r in &rows {
        println!(
            "{:>6.2} {:>7.2} {:>6.2} {:>7.2} {:>6.4} {:>6.3}",
            r.alpha_time, r.alpha_price, r.alpha_dist, r.i_ct_min, r.i_ep_eur_per_kwh, r.i_d
        );
    }
    let best = |key: fn(&evcharge::metrics::SweepRow) -> f64| {
        rows.iter().min_by(|a, b| key(a).total_cmp(&key(b))).map(|r| (r.alpha_time, r.alpha_price, r.alpha_dist)).unwrap()
    };
    println!("lowest i_ct at {:?}", best(|r| r.i_ct_min));
    println!("lowest i_ep at {:?}", best(|r| r.i_ep_eur_per_kwh));
    println!("lowest i_d  at {:?}", best(|r| r.i_d));
    Ok(())
}
