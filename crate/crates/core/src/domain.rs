//! Value types shared across the simulator: positions, preference weights,
//! energy requests, vehicles, stations and the global simulation parameters.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ledger::AccountId;

/// Simulation clock, in whole seconds since the start of a run.
pub type SimTime = u64;

/// Tolerance used when checking that preference weights sum to one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("preference weights ({0}, {1}, {2}) are not a convex combination")]
    NonConvexWeights(f64, f64, f64),
    #[error("position ({0}, {1}) is not finite")]
    NonFinitePosition(f64, f64),
    #[error("position ({0}, {1}) lies outside the unit square")]
    OutsideUnitSquare(f64, f64),
    #[error("energy request {amount} kWh outside (0, {max}]")]
    InvalidEnergyRequest { amount: f64, max: f64 },
    #[error("simulation parameter `{0}` must be strictly positive")]
    NonPositiveParam(&'static str),
    #[error("tariff must be strictly positive, got {0}")]
    NonPositiveTariff(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Result<Self, DomainError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(DomainError::NonFinitePosition(x, y));
        }
        Ok(Self { x, y })
    }

    /// Like [`Position::new`] but additionally requires both coordinates in `[0, 1]`.
    pub fn in_unit_square(x: f64, y: f64) -> Result<Self, DomainError> {
        let p = Self::new(x, y)?;
        if !p.is_in_unit_square() {
            return Err(DomainError::OutsideUnitSquare(x, y));
        }
        Ok(p)
    }

    pub fn is_in_unit_square(&self) -> bool {
        (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y)
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Road-graph node identifier.
pub type NodeId = u32;

/// Where something sits in the arena: a point, plus the graph node it is
/// pinned to when the arena is a road graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Place {
    pub position: Position,
    pub node: Option<NodeId>,
}

impl Place {
    pub fn point(position: Position) -> Self {
        Self { position, node: None }
    }

    pub fn at_node(node: NodeId, position: Position) -> Self {
        Self { position, node: Some(node) }
    }
}

/// Convex weights over (charging time, price, distance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct PreferenceWeights {
    alpha_time: f64,
    alpha_price: f64,
    alpha_dist: f64,
}

impl PreferenceWeights {
    pub fn new(alpha_time: f64, alpha_price: f64, alpha_dist: f64) -> Result<Self, DomainError> {
        validate_weights(Self { alpha_time, alpha_price, alpha_dist })
    }

    pub const ALL_TIME: Self = Self { alpha_time: 1.0, alpha_price: 0.0, alpha_dist: 0.0 };
    pub const ALL_PRICE: Self = Self { alpha_time: 0.0, alpha_price: 1.0, alpha_dist: 0.0 };
    pub const ALL_DISTANCE: Self = Self { alpha_time: 0.0, alpha_price: 0.0, alpha_dist: 1.0 };

    pub fn equal() -> Self {
        Self { alpha_time: 1.0 / 3.0, alpha_price: 1.0 / 3.0, alpha_dist: 1.0 / 3.0 }
    }

    pub fn time(&self) -> f64 {
        self.alpha_time
    }

    pub fn price(&self) -> f64 {
        self.alpha_price
    }

    pub fn dist(&self) -> f64 {
        self.alpha_dist
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha_time, self.alpha_price, self.alpha_dist]
    }

    /// Every convex tuple on a regular grid with `divisions` steps per axis,
    /// ordered by (time, price) descending. `divisions = 10` gives the
    /// 66-point grid with step 0.1.
    pub fn grid(divisions: u32) -> Vec<Self> {
        let n = divisions as f64;
        let mut out = Vec::new();
        for i in (0..=divisions).rev() {
            for j in (0..=divisions - i).rev() {
                let k = divisions - i - j;
                out.push(Self {
                    alpha_time: i as f64 / n,
                    alpha_price: j as f64 / n,
                    alpha_dist: k as f64 / n,
                });
            }
        }
        out
    }
}

impl TryFrom<[f64; 3]> for PreferenceWeights {
    type Error = DomainError;

    fn try_from(a: [f64; 3]) -> Result<Self, Self::Error> {
        Self::new(a[0], a[1], a[2])
    }
}

impl From<PreferenceWeights> for [f64; 3] {
    fn from(w: PreferenceWeights) -> Self {
        w.as_array()
    }
}

impl fmt::Display for PreferenceWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.alpha_time, self.alpha_price, self.alpha_dist)
    }
}

/// Returns `w` unchanged when all weights are non-negative and sum to one.
pub fn validate_weights(w: PreferenceWeights) -> Result<PreferenceWeights, DomainError> {
    let [a, b, c] = w.as_array();
    let finite = a.is_finite() && b.is_finite() && c.is_finite();
    if !finite || a < 0.0 || b < 0.0 || c < 0.0 || ((a + b + c) - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(DomainError::NonConvexWeights(a, b, c));
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EnergyRequest(f64);

impl EnergyRequest {
    pub fn new(amount_kwh: f64, max_request_kwh: f64) -> Result<Self, DomainError> {
        if !(amount_kwh > 0.0 && amount_kwh <= max_request_kwh) {
            return Err(DomainError::InvalidEnergyRequest { amount: amount_kwh, max: max_request_kwh });
        }
        Ok(Self(amount_kwh))
    }

    pub fn kwh(&self) -> f64 {
        self.0
    }
}

const MAX_RESAMPLES: usize = 10_000;

/// Gaussian energy demand truncated to `[min_kwh, max_kwh]` by resampling.
///
/// Callers must ensure `0 < min_kwh < max_kwh` and `std_kwh >= 0`. A zero
/// standard deviation, or a distribution with almost no mass inside the
/// range, returns the mean clamped into range.
pub fn sample_energy_request<R: Rng + ?Sized>(
    rng: &mut R,
    mean_kwh: f64,
    std_kwh: f64,
    min_kwh: f64,
    max_kwh: f64,
) -> EnergyRequest {
    debug_assert!(min_kwh > 0.0 && max_kwh > min_kwh);
    if std_kwh == 0.0 {
        return EnergyRequest(mean_kwh.clamp(min_kwh, max_kwh));
    }
    let normal = Normal::new(mean_kwh, std_kwh).expect("standard deviation is finite and non-negative");
    for _ in 0..MAX_RESAMPLES {
        let x = normal.sample(rng);
        if (min_kwh..=max_kwh).contains(&x) {
            return EnergyRequest(x);
        }
    }
    EnergyRequest(mean_kwh.clamp(min_kwh, max_kwh))
}

pub type VehicleId = u64;
pub type StationId = u32;

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: VehicleId,
    pub place: Place,
    pub request: EnergyRequest,
    pub weights: PreferenceWeights,
    pub spawn_time: SimTime,
    /// Realized compliance for this trip; `None` until resolved.
    pub compliant_draw: Option<bool>,
}

impl Vehicle {
    /// What the vehicle broadcasts to every station when asking for a charge.
    pub fn broadcast(&self) -> VehicleBroadcast {
        VehicleBroadcast {
            vehicle_id: self.id,
            place: self.place,
            request_kwh: self.request.kwh(),
            weights: self.weights,
        }
    }
}

/// The only vehicle information a station receives.
#[derive(Debug, Clone, Copy)]
pub struct VehicleBroadcast {
    pub vehicle_id: VehicleId,
    pub place: Place,
    pub request_kwh: f64,
    pub weights: PreferenceWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewableKind {
    None,
    Pv,
    Wind,
}

impl fmt::Display for RenewableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RenewableKind::None => "none",
            RenewableKind::Pv => "pv",
            RenewableKind::Wind => "wind",
        })
    }
}

/// Per-second renewable generation of one station, stored cumulatively so
/// that the energy produced over any window is a single subtraction.
#[derive(Debug, Clone)]
pub struct RenewableProfile {
    pub kind: RenewableKind,
    pub nominal_power_kw: f64,
    // cumulative[k] = energy generated during seconds [0, k), in kWh
    cumulative: Arc<[f64]>,
}

impl RenewableProfile {
    pub fn none() -> Self {
        Self { kind: RenewableKind::None, nominal_power_kw: 0.0, cumulative: Arc::from(vec![0.0]) }
    }

    /// Builds a profile from per-second generated energy (kWh per second).
    /// Generation after the last sample is zero.
    pub fn from_series(kind: RenewableKind, nominal_power_kw: f64, per_second_kwh: &[f64]) -> Self {
        assert!(nominal_power_kw >= 0.0);
        let mut cumulative = Vec::with_capacity(per_second_kwh.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for &e in per_second_kwh {
            debug_assert!(e >= 0.0);
            if kind != RenewableKind::None {
                acc += e;
            }
            cumulative.push(acc);
        }
        Self { kind, nominal_power_kw, cumulative: Arc::from(cumulative) }
    }

    fn cumulative_at(&self, t: SimTime) -> f64 {
        let idx = (t as usize).min(self.cumulative.len() - 1);
        self.cumulative[idx]
    }

    /// Energy generated during `[from, to)`.
    pub fn energy_between(&self, from: SimTime, to: SimTime) -> f64 {
        if to <= from {
            return 0.0;
        }
        self.cumulative_at(to) - self.cumulative_at(from)
    }

    /// Energy generated during the single second starting at `t`.
    pub fn generation_at(&self, t: SimTime) -> f64 {
        self.energy_between(t, t + 1)
    }
}

/// Tokens in integer micro-units, so balances are conserved exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tokens(pub u64);

impl Tokens {
    pub const MICROS_PER_TOKEN: u64 = 1_000_000;
    pub const ZERO: Tokens = Tokens(0);

    pub fn from_tokens(value: f64) -> Self {
        assert!(value >= 0.0 && value.is_finite(), "token amount must be finite and non-negative");
        Tokens((value * Self::MICROS_PER_TOKEN as f64).round() as u64)
    }

    pub fn as_tokens(&self) -> f64 {
        self.0 as f64 / Self::MICROS_PER_TOKEN as f64
    }

    pub fn checked_sub(self, other: Tokens) -> Option<Tokens> {
        self.0.checked_sub(other.0).map(Tokens)
    }

    pub fn saturating_add(self, other: Tokens) -> Tokens {
        Tokens(self.0.saturating_add(other.0))
    }
}

impl std::ops::Add for Tokens {
    type Output = Tokens;

    fn add(self, rhs: Tokens) -> Tokens {
        Tokens(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Tokens {
    fn sum<I: Iterator<Item = Tokens>>(iter: I) -> Tokens {
        iter.fold(Tokens::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Tokens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}", self.as_tokens())
    }
}

/// A charging station as seen by its own evaluator: static description plus
/// the committed energy it currently knows about. The physical queue lives in
/// the engine.
#[derive(Debug, Clone)]
pub struct Station {
    pub id: StationId,
    pub place: Place,
    pub chargers: u32,
    /// Energy committed to this station and not yet delivered (kWh).
    pub queued_energy_kwh: f64,
    pub renewable: RenewableProfile,
    pub tariff_eur_per_kwh: f64,
    pub account_id: AccountId,
}

impl Station {
    pub fn new(
        id: StationId,
        place: Place,
        chargers: u32,
        renewable: RenewableProfile,
        tariff_eur_per_kwh: f64,
    ) -> Result<Self, DomainError> {
        if !(tariff_eur_per_kwh > 0.0) {
            return Err(DomainError::NonPositiveTariff(tariff_eur_per_kwh));
        }
        if chargers == 0 {
            return Err(DomainError::NonPositiveParam("chargers"));
        }
        Ok(Self {
            id,
            place,
            chargers,
            queued_energy_kwh: 0.0,
            renewable,
            tariff_eur_per_kwh,
            account_id: AccountId::Station(id),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Energy delivered to one vehicle in one second (kWh).
    pub charge_rate_kwh_per_s: f64,
    /// Normalization time for the charging-time cost term (s).
    pub m_max_s: f64,
    /// Normalization distance for the distance cost term.
    pub d_max: f64,
    pub vehicle_speed: f64,
    pub arrival_rate_per_s: f64,
    pub horizon_s: f64,
}

impl SimParams {
    /// 22 kW charging, 7 hours, ~500 arrivals, unit-square normalization.
    pub fn unit_square_defaults() -> Self {
        Self {
            charge_rate_kwh_per_s: 0.0061,
            m_max_s: 3600.0,
            d_max: std::f64::consts::SQRT_2,
            vehicle_speed: 0.02,
            arrival_rate_per_s: 500.0 / (7.0 * 3600.0),
            horizon_s: 7.0 * 3600.0,
        }
    }

    pub fn validate(self) -> Result<Self, DomainError> {
        let fields = [
            ("charge_rate_kwh_per_s", self.charge_rate_kwh_per_s),
            ("m_max_s", self.m_max_s),
            ("d_max", self.d_max),
            ("vehicle_speed", self.vehicle_speed),
            ("arrival_rate_per_s", self.arrival_rate_per_s),
            ("horizon_s", self.horizon_s),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(DomainError::NonPositiveParam(name));
            }
        }
        Ok(self)
    }
}
