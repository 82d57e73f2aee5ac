//! The bond controller, first against the noiseless response curve and then
//! inside the simulator where compliance is measured from settlements.

use std::path::Path;

use evcharge::compliance::{simulate_noiseless_loop, ControllerState};
use evcharge::config;
use evcharge::engine::{run_scenario, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/closed_loop.toml"), &[])?;
    let c = &cfg.compliance;

    let init = ControllerState::new(c.initial_bond, c.target, c.gains(), c.bond_min, c.bond_max);
    let trace = simulate_noiseless_loop(&c.model(), init, 40);
    println!("noiseless loop, target {}", c.target);
    for (k, (q, bond)) in trace.iter().enumerate().step_by(5) {
        println!("  window {k:>3}: bond {bond:>6.2}  q {q:.3}");
    }

    let r = run_scenario(&Scenario::prepare(&cfg)?, 0, cfg.monte_carlo.base_seed)?;
    println!("simulated run, {} controller updates", r.controller.len());
    for s in &r.controller {
        println!("  t {:>5}s  measured {:.2}  model {:.3}  bond {:>6.2}", s.time, s.q_measured, s.q_model, s.bond);
    }
    Ok(())
}
