//! Participation factors on the synthetic city: price-driven demand piles up
//! at renewable stations, mixed preferences spread it out.

use std::path::Path;

use evcharge::config;
use evcharge::engine::{run_monte_carlo, Scenario};
use evcharge::metrics::{participation_entropy, participation_factors, renewable_generation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for name in ["city_all_price", "city_equal_weights"] {
        let cfg = config::load(&dir.join(format!("{name}.toml")), &[])?;
        let results = run_monte_carlo(&Scenario::prepare(&cfg)?, 10, cfg.monte_carlo.base_seed)?;
        let factors = participation_factors(&results);
        let generation = renewable_generation(&results);
        println!("{name}: entropy {:.3}", participation_entropy(&factors));
        for (id, share) in &factors {
            let kind = format!("{:?}", results[0].stations[*id as usize].kind);
            println!("  station {id:>2} {kind:<5} renewable {:>5.1} kWh  share {:>5.1}%", generation[id], 100.0 * share);
        }
    }
    Ok(())
}
