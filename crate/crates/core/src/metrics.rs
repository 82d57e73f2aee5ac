//! Per-vehicle records, performance indices and the experiment drivers built
//! on them (solver comparison, weight sweep, compliance curve).
//!
//! Everything here is post-processing over finished [`RunResult`]s.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::compliance::ControllerSample;
use crate::config::{ComplianceMode, ScenarioConfig, SolverKind, WeightsConfig};
use crate::domain::{NodeId, PreferenceWeights, RenewableKind, SimParams, SimTime, StationId, Vehicle, VehicleId};
use crate::engine::{run_monte_carlo, EngineError, Event, Scenario};
use crate::ledger::{EscrowId, Ledger};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("no vehicle completed charging")]
    EmptyRun,
    #[error("no energy was charged")]
    ZeroEnergy,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Everything recorded about one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VehicleRecord {
    pub id: VehicleId,
    pub spawn_time: SimTime,
    pub x: f64,
    pub y: f64,
    pub node: Option<NodeId>,
    pub request_kwh: f64,
    pub alpha_time: f64,
    pub alpha_price: f64,
    pub alpha_dist: f64,
    pub assigned_station: Option<StationId>,
    pub assignment_time: Option<SimTime>,
    pub wait_steps: u32,
    /// Distance to the assigned station at assignment time.
    pub assigned_distance: f64,
    pub assigned_cost: f64,
    /// Station actually driven to.
    pub target_station: Option<StationId>,
    pub defected: bool,
    /// False when the vehicle could not fund its bond.
    pub participant: bool,
    pub bond_tokens: f64,
    pub escrow: Option<EscrowId>,
    pub arrival_time: Option<SimTime>,
    pub charge_start: Option<SimTime>,
    pub charge_end: Option<SimTime>,
    /// Renewable share of the request (kWh).
    pub renewable_kwh: f64,
    pub price_eur: f64,
}

impl VehicleRecord {
    pub fn new(v: &Vehicle) -> Self {
        let [alpha_time, alpha_price, alpha_dist] = v.weights.as_array();
        Self {
            id: v.id,
            spawn_time: v.spawn_time,
            x: v.place.position.x,
            y: v.place.position.y,
            node: v.place.node,
            request_kwh: v.request.kwh(),
            alpha_time,
            alpha_price,
            alpha_dist,
            assigned_station: None,
            assignment_time: None,
            wait_steps: 0,
            assigned_distance: 0.0,
            assigned_cost: 0.0,
            target_station: None,
            defected: false,
            participant: true,
            bond_tokens: 0.0,
            escrow: None,
            arrival_time: None,
            charge_start: None,
            charge_end: None,
            renewable_kwh: 0.0,
            price_eur: 0.0,
        }
    }

    /// Travel, queueing and charging time in seconds, once charging is done.
    pub fn charging_time_s(&self) -> Option<f64> {
        self.charge_end.map(|end| (end - self.spawn_time) as f64)
    }
}

/// Station state sampled at a fixed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationSample {
    pub time: SimTime,
    pub station: StationId,
    pub queue_len: usize,
    pub queued_energy_kwh: f64,
    pub renewable_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationSummary {
    pub id: StationId,
    pub kind: RenewableKind,
    pub x: f64,
    pub y: f64,
    pub node: Option<NodeId>,
    pub chargers: u32,
    /// Renewable energy generated over the horizon (kWh).
    pub renewable_generated_kwh: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: u64,
    pub seed: u64,
    pub params: SimParams,
    pub horizon_s: SimTime,
    pub vehicles: Vec<VehicleRecord>,
    pub stations: Vec<StationSummary>,
    pub samples: Vec<StationSample>,
    pub controller: Vec<ControllerSample>,
    pub events: Vec<Event>,
    pub ledger: Option<Ledger>,
    pub delivered_kwh: f64,
}

impl RunResult {
    pub fn completed(&self) -> impl Iterator<Item = &VehicleRecord> {
        self.vehicles.iter().filter(|v| v.charge_end.is_some())
    }

    /// Mean charging time of this run in minutes.
    pub fn mean_charging_time_min(&self) -> Option<f64> {
        mean(self.completed().filter_map(|v| v.charging_time_s()).map(|s| s / 60.0))
    }

    /// Grid energy price paid per kWh charged in this run.
    pub fn energy_price(&self) -> Option<f64> {
        let energy: f64 = self.completed().map(|v| v.request_kwh).sum();
        (energy > 0.0).then(|| self.completed().map(|v| v.price_eur).sum::<f64>() / energy)
    }

    pub fn mean_assigned_distance(&self) -> Option<f64> {
        mean(self.vehicles.iter().filter(|v| v.assigned_station.is_some()).map(|v| v.assigned_distance))
    }

    /// Time a newcomer would need to drain each station's committed energy,
    /// averaged over all stations including empty ones (minutes).
    pub fn system_charging_time_series(&self) -> Vec<(SimTime, f64)> {
        let chargers: BTreeMap<StationId, u32> = self.stations.iter().map(|s| (s.id, s.chargers)).collect();
        let rate = self.params.charge_rate_kwh_per_s;
        let mut by_time: BTreeMap<SimTime, (f64, usize)> = BTreeMap::new();
        for s in &self.samples {
            let minutes = s.queued_energy_kwh / (chargers[&s.station] as f64 * rate) / 60.0;
            let e = by_time.entry(s.time).or_default();
            e.0 += minutes;
            e.1 += 1;
        }
        by_time.into_iter().map(|(t, (sum, n))| (t, sum / n as f64)).collect()
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn std_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Mean over runs of each run's mean charging time (minutes). Runs in which
/// nothing finished charging are skipped.
pub fn index_charging_time(results: &[RunResult]) -> Result<f64, MetricsError> {
    mean(results.iter().filter_map(RunResult::mean_charging_time_min)).ok_or(MetricsError::EmptyRun)
}

/// Mean over runs of `tariff * (E_charged - E_renewable) / E_charged`.
pub fn index_energy_price(results: &[RunResult]) -> Result<f64, MetricsError> {
    mean(results.iter().filter_map(RunResult::energy_price)).ok_or(MetricsError::ZeroEnergy)
}

/// Mean distance to the assigned station at assignment time.
pub fn index_distance(results: &[RunResult]) -> Result<f64, MetricsError> {
    mean(results.iter().filter_map(RunResult::mean_assigned_distance)).ok_or(MetricsError::EmptyRun)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Indices {
    pub i_ct_min: f64,
    pub i_ep_eur_per_kwh: f64,
    pub i_d: f64,
}

pub fn indices(results: &[RunResult]) -> Result<Indices, MetricsError> {
    Ok(Indices {
        i_ct_min: index_charging_time(results)?,
        i_ep_eur_per_kwh: index_energy_price(results)?,
        i_d: index_distance(results)?,
    })
}

/// Share of assignments received by each station, pooled over runs.
pub fn participation_factors(results: &[RunResult]) -> BTreeMap<StationId, f64> {
    let mut counts: BTreeMap<StationId, usize> = BTreeMap::new();
    for r in results {
        for s in &r.stations {
            counts.entry(s.id).or_default();
        }
        for v in &r.vehicles {
            if let Some(s) = v.assigned_station {
                *counts.entry(s).or_default() += 1;
            }
        }
    }
    let total: usize = counts.values().sum();
    counts
        .into_iter()
        .map(|(id, c)| (id, if total == 0 { 0.0 } else { c as f64 / total as f64 }))
        .collect()
}

/// Shannon entropy (nats) of a participation distribution.
pub fn participation_entropy(factors: &BTreeMap<StationId, f64>) -> f64 {
    -factors.values().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// Mean renewable generation per station over runs (kWh).
pub fn renewable_generation(results: &[RunResult]) -> BTreeMap<StationId, f64> {
    let mut acc: BTreeMap<StationId, f64> = BTreeMap::new();
    for r in results {
        for s in &r.stations {
            *acc.entry(s.id).or_default() += s.renewable_generated_kwh / results.len() as f64;
        }
    }
    acc
}

/// Station ids sorted by decreasing value, ties by id.
pub fn ranked(values: &BTreeMap<StationId, f64>) -> Vec<StationId> {
    let mut ids: Vec<StationId> = values.keys().copied().collect();
    ids.sort_by(|a, b| values[b].total_cmp(&values[a]).then(a.cmp(b)));
    ids
}

/// Pointwise mean of the runs' system charging-time series.
pub fn mean_system_series(results: &[RunResult]) -> Vec<(SimTime, f64)> {
    let mut acc: BTreeMap<SimTime, (f64, usize)> = BTreeMap::new();
    for r in results {
        for (t, v) in r.system_charging_time_series() {
            let e = acc.entry(t).or_default();
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(t, (s, n))| (t, s / n as f64)).collect()
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Mean protocol wait over all assignments, with the number of assignments.
pub fn mean_wait_steps(results: &[RunResult]) -> (f64, usize) {
    let waits: Vec<f64> =
        results.iter().flat_map(|r| r.vehicles.iter()).filter(|v| v.assigned_station.is_some()).map(|v| v.wait_steps as f64).collect();
    (mean(waits.iter().copied()).unwrap_or(0.0), waits.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverComparison {
    pub runs: usize,
    pub centralized: Indices,
    pub decentralized: Indices,
    /// Decentralized over centralized mean charging time.
    pub ratio: f64,
    /// RMSE between the two mean system charging-time series (minutes).
    pub rmse_min: f64,
    pub mean_wait_steps: f64,
    pub assignments: usize,
    /// (time, centralized, decentralized) system charging time (minutes).
    pub series: Vec<(SimTime, f64, f64)>,
}

/// Runs `config` under both solvers with the same seeds.
pub fn compare_solvers(config: &ScenarioConfig, n_runs: usize, seed: u64) -> Result<SolverComparison, MetricsError> {
    let with = |kind| {
        let mut c = config.clone();
        c.solver.kind = kind;
        Scenario::prepare(&c).and_then(|sc| run_monte_carlo(&sc, n_runs, seed))
    };
    let cen = with(SolverKind::Centralized)?;
    let dec = with(SolverKind::Decentralized)?;
    let (ci, di) = (indices(&cen)?, indices(&dec)?);
    let (cs, ds) = (mean_system_series(&cen), mean_system_series(&dec));
    let a: Vec<f64> = cs.iter().map(|p| p.1).collect();
    let b: Vec<f64> = ds.iter().map(|p| p.1).collect();
    let (mean_wait_steps, assignments) = mean_wait_steps(&dec);
    Ok(SolverComparison {
        runs: n_runs,
        centralized: ci,
        decentralized: di,
        ratio: di.i_ct_min / ci.i_ct_min,
        rmse_min: rmse(&a, &b),
        mean_wait_steps,
        assignments,
        series: cs.iter().zip(&ds).map(|(c, d)| (c.0, c.1, d.1)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha_time: f64,
    pub alpha_price: f64,
    pub alpha_dist: f64,
    pub i_ct_min: f64,
    pub i_ep_eur_per_kwh: f64,
    pub i_d: f64,
}

/// The indices at every convex weight triple on a grid of step
/// `1 / divisions` (66 points for 10), all drivers sharing the triple.
pub fn weight_sweep(config: &ScenarioConfig, divisions: u32, n_runs: usize, seed: u64) -> Result<Vec<SweepRow>, MetricsError> {
    PreferenceWeights::grid(divisions)
        .into_iter()
        .map(|alpha| {
            let sc = Scenario::prepare(&config.with_weights(WeightsConfig::Fixed { alpha }))?;
            let ix = indices(&run_monte_carlo(&sc, n_runs, seed)?)?;
            let [alpha_time, alpha_price, alpha_dist] = alpha.as_array();
            Ok(SweepRow {
                alpha_time,
                alpha_price,
                alpha_dist,
                i_ct_min: ix.i_ct_min,
                i_ep_eur_per_kwh: ix.i_ep_eur_per_kwh,
                i_d: ix.i_d,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub q: f64,
    pub runs: usize,
    pub i_ct_min: f64,
    /// Standard error of the mean over runs.
    pub i_ct_stderr: f64,
    pub defection_rate: f64,
}

/// Mean charging time at each fixed compliance level.
pub fn compliance_curve(config: &ScenarioConfig, q_grid: &[f64], n_runs: usize, seed: u64) -> Result<Vec<CurvePoint>, MetricsError> {
    q_grid
        .iter()
        .map(|&q| {
            let mut c = config.clone();
            c.compliance.mode = ComplianceMode::Fixed;
            c.compliance.q = q;
            let results = run_monte_carlo(&Scenario::prepare(&c)?, n_runs, seed)?;
            let per_run: Vec<f64> = results.iter().filter_map(RunResult::mean_charging_time_min).collect();
            if per_run.is_empty() {
                return Err(MetricsError::EmptyRun);
            }
            let assigned = results.iter().flat_map(|r| &r.vehicles).filter(|v| v.assigned_station.is_some()).count();
            let defected = results.iter().flat_map(|r| &r.vehicles).filter(|v| v.defected).count();
            Ok(CurvePoint {
                q,
                runs: n_runs,
                i_ct_min: per_run.iter().sum::<f64>() / per_run.len() as f64,
                i_ct_stderr: std_error(&per_run),
                defection_rate: if assigned == 0 { 0.0 } else { defected as f64 / assigned as f64 },
            })
        })
        .collect()
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // tied values share their average rank
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
