use std::path::PathBuf;

use evcharge::config::{self, ScenarioConfig};
use evcharge::engine::{run_scenario_checked, Scenario};
use evcharge::ledger::EscrowStatus;
use evcharge::metrics::RunResult;
use proptest::prelude::*;

fn scenario_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn load(name: &str, overrides: &[&str]) -> ScenarioConfig {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    config::load(&scenario_file(name), &overrides).unwrap()
}

/// Runs with every invariant checked after every step, then checks the
/// per-vehicle record.
fn checked_run(cfg: &ScenarioConfig, seed: u64) -> RunResult {
    let scenario = Scenario::prepare(cfg).unwrap();
    let r = run_scenario_checked(&scenario, 0, seed, Some(1)).unwrap();
    let e_r = cfg.sim.charge_rate_kwh_per_s;
    let mut completed_kwh = 0.0;
    for v in &r.vehicles {
        assert!(v.assigned_station.is_some(), "vehicle {} never assigned", v.id);
        assert_eq!(v.defected, v.target_station != v.assigned_station);
        if let (Some(arrive), Some(start), Some(end)) = (v.arrival_time, v.charge_start, v.charge_end) {
            assert!(arrive <= start && start < end);
            // one step per e_r kWh, the last one partial
            assert_eq!(end - start, (v.request_kwh / e_r).ceil() as u64, "vehicle {}", v.id);
            completed_kwh += v.request_kwh;
        }
    }
    assert!(r.delivered_kwh + 1e-9 >= completed_kwh);
    if let Some(ledger) = &r.ledger {
        ledger.check_invariants().unwrap();
        for v in r.vehicles.iter().filter(|v| v.participant) {
            let escrow = ledger.escrow(v.escrow.expect("participant without escrow")).unwrap();
            match escrow.status {
                EscrowStatus::Returned => assert!(!v.defected && v.arrival_time.is_some()),
                EscrowStatus::Forfeited => assert!(v.defected),
                EscrowStatus::Open => {}
            }
        }
    }
    r
}

/// Every fixed scenario, checked after every step.
pub fn suite() {
    centralized_baseline();
    decentralized_baseline();
    defections_with_phantom_entries();
    closed_loop();
    road_graph();
}

fn centralized_baseline() {
    checked_run(&load("baseline", &[]), 11);
}

fn decentralized_baseline() {
    checked_run(&load("baseline", &["solver.kind=decentralized"]), 12);
}

fn defections_with_phantom_entries() {
    let r = checked_run(&load("compliance_curve", &["compliance.q=0.5"]), 13);
    assert!(r.vehicles.iter().any(|v| v.defected));
}

fn closed_loop() {
    let r = checked_run(&load("closed_loop", &[]), 14);
    assert!(!r.controller.is_empty());
}

fn road_graph() {
    checked_run(&load("city_all_price", &["compliance.mode=fixed", "compliance.q=0.7"]), 15);
}

#[test]
fn centralized_baseline_keeps_invariants() {
    centralized_baseline();
}

#[test]
fn decentralized_baseline_keeps_invariants() {
    decentralized_baseline();
}

#[test]
fn defections_with_phantom_entries_keep_invariants() {
    defections_with_phantom_entries();
}

#[test]
fn closed_loop_keeps_invariants() {
    closed_loop();
}

#[test]
fn road_graph_keeps_invariants() {
    road_graph();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_short_runs_keep_invariants(
        seed in any::<u64>(),
        q in 0.0f64..=1.0,
        decentralized in any::<bool>(),
        a in 0.0f64..=1.0,
        b in 0.0f64..=1.0,
    ) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let kind = if decentralized { "decentralized" } else { "centralized" };
        let cfg = load("compliance_curve", &[
            "sim.horizon_s=5400",
            &format!("compliance.q={q}"),
            &format!("solver.kind=\"{kind}\""),
            &format!("weights.alpha=[{lo}, {}, {}]", hi - lo, 1.0 - hi),
        ]);
        checked_run(&cfg, seed);
    }
}
