//! Mean charging time as driver compliance goes from none to full.

use std::path::Path;

use evcharge::config;
use evcharge::metrics::compliance_curve;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/compliance_curve.toml"), &[])?;
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    for p in compliance_curve(&cfg, &grid, 20, cfg.monte_carlo.base_seed)? {
        println!("q {:.2}: i_ct {:.2} +/- {:.2} min, {:.1}% defected", p.q, p.i_ct_min, p.i_ct_stderr, 100.0 * p.defection_rate);
    }
    Ok(())
}
