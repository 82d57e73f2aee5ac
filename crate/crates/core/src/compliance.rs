//! Driver compliance and the bond controller.
//!
//! A driver who accepted station `j` either goes there or defects to the
//! nearest station. The population's compliance responds to the bond value
//! through a saturating exponential; a PI controller adjusts the bond so that
//! the compliance measured on the ledger tracks a target.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::StationId;
use crate::ledger::Settlement;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplianceModel {
    /// Compliance with no bond at stake.
    pub base_compliance: f64,
    /// Bond value at which ~63% of the remaining headroom is gained.
    pub sensitivity: f64,
}

impl Default for ComplianceModel {
    fn default() -> Self {
        Self { base_compliance: 0.4, sensitivity: 5.0 }
    }
}

/// Compliance probability for bond value `bond`:
/// `q0 + (1 - q0) * (1 - exp(-bond / c0))`.
pub fn compliance_response(model: &ComplianceModel, bond: f64) -> f64 {
    debug_assert!(bond >= 0.0);
    let q0 = model.base_compliance;
    q0 + (1.0 - q0) * (1.0 - (-bond / model.sensitivity).exp())
}

/// Where a vehicle actually drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplianceDecision {
    pub target: StationId,
    pub defected: bool,
}

/// With probability `q_effective` the vehicle keeps its assignment,
/// otherwise it heads for the nearest station. Choosing the nearest station
/// when it is the assigned one counts as complying.
pub fn resolve_compliance<R: Rng + ?Sized>(
    assigned: StationId,
    nearest: StationId,
    q_effective: f64,
    rng: &mut R,
) -> ComplianceDecision {
    debug_assert!((0.0..=1.0).contains(&q_effective));
    // always draw so the stream position does not depend on the outcome
    let complies = rng.random::<f64>() < q_effective;
    if complies || nearest == assigned {
        ComplianceDecision { target: assigned, defected: false }
    } else {
        ComplianceDecision { target: nearest, defected: true }
    }
}

/// Fraction of returned bonds among the last `window_size` settlements, or
/// `previous` if there are none.
pub fn estimate_compliance(settlements: &[Settlement], window_size: usize, previous: f64) -> f64 {
    assert!(window_size >= 1);
    let start = settlements.len().saturating_sub(window_size);
    let window = &settlements[start..];
    if window.is_empty() {
        return previous;
    }
    window.iter().filter(|s| s.returned).count() as f64 / window.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    pub kp: f64,
    pub ki: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self { kp: 20.0, ki: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub bond: f64,
    pub target: f64,
    pub gains: ControllerGains,
    pub integral: f64,
    pub bond_min: f64,
    pub bond_max: f64,
}

impl ControllerState {
    pub fn new(initial_bond: f64, target: f64, gains: ControllerGains, bond_min: f64, bond_max: f64) -> Self {
        assert!(bond_min <= bond_max && (0.0..=1.0).contains(&target));
        Self { bond: initial_bond.clamp(bond_min, bond_max), target, gains, integral: 0.0, bond_min, bond_max }
    }
}

/// One PI update of the bond from a compliance measurement. The integral is
/// frozen whenever the new bond would leave `[bond_min, bond_max]`.
pub fn controller_step(state: &ControllerState, q_measured: f64) -> ControllerState {
    debug_assert!((0.0..=1.0).contains(&q_measured));
    let error = state.target - q_measured;
    let integral = state.integral + error;
    let raw = state.bond + state.gains.kp * error + state.gains.ki * integral;
    let bond = raw.clamp(state.bond_min, state.bond_max);
    let saturated = bond != raw;
    ControllerState { bond, integral: if saturated { state.integral } else { integral }, ..*state }
}

/// One row of the controller trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ControllerSample {
    pub time: u64,
    pub settlements: usize,
    pub q_measured: f64,
    pub q_model: f64,
    pub bond: f64,
}

/// Runs the loop against the noiseless response: each window measures
/// exactly `compliance_response(bond)`. Returns the compliance level after
/// every update.
pub fn simulate_noiseless_loop(model: &ComplianceModel, initial: ControllerState, windows: usize) -> Vec<(f64, f64)> {
    let mut state = initial;
    let mut trace = Vec::with_capacity(windows);
    for _ in 0..windows {
        let q = compliance_response(model, state.bond);
        state = controller_step(&state, q);
        trace.push((compliance_response(model, state.bond), state.bond));
    }
    trace
}
