//! Discrete-time simulation with a one-second step.
//!
//! Each step: confirm ledger transactions whose proof of work is done, spawn
//! vehicles (Poisson), assign and dispatch them, then let the world advance
//! (arrivals, expired commitments, charging, sampling). Monte Carlo runs are
//! independent and execute in parallel; results come back in run order.

mod renewables;
mod world;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

pub use renewables::{pv_profile, wind_profile};
pub use world::World;

use crate::assignment::AssignmentError;
use crate::config::{ArenaMode, ScenarioConfig, WeightsConfig};
use crate::domain::{
    sample_energy_request, DomainError, NodeId, Place, Position, PreferenceWeights, RenewableKind, RenewableProfile,
    SimParams, SimTime, Station, StationId, Vehicle, VehicleId,
};
use crate::ledger::LedgerError;
use crate::metrics::{RunResult, StationSummary};
use crate::mobility::{Arena, GraphError};
use crate::rng::{stream_rng, streams, SimRng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("weights.kind = \"sweep\" is only valid for the sweep command")]
    SweepWeights,
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Append-only simulation log entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Spawn { time: SimTime, vehicle: VehicleId },
    Assign { time: SimTime, vehicle: VehicleId, station: StationId, wait_steps: u32 },
    Defect { time: SimTime, vehicle: VehicleId, station: StationId },
    Arrive { time: SimTime, vehicle: VehicleId, station: StationId },
    ChargeEnd { time: SimTime, vehicle: VehicleId, station: StationId },
    Purge { time: SimTime, vehicle: VehicleId, station: StationId },
    Settle { time: SimTime, vehicle: VehicleId, returned: bool },
}

#[derive(Debug, Clone)]
enum SpawnArea {
    UnitSquare,
    Nodes(Vec<(NodeId, Position)>),
}

/// A validated configuration turned into simulation objects. Shared by all
/// Monte Carlo runs of a scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: SimParams,
    pub arena: Arena,
    station_places: Vec<Place>,
    spawn_area: SpawnArea,
    pv: RenewableProfile,
}

impl Scenario {
    pub fn prepare(config: &ScenarioConfig) -> Result<Self, EngineError> {
        if matches!(config.weights, WeightsConfig::Sweep { .. }) {
            return Err(EngineError::SweepWeights);
        }
        let params = config.sim_params().validate()?;
        let st = &config.stations;
        let (arena, station_places, spawn_area) = match config.arena.mode {
            ArenaMode::UnitSquare => {
                let places = st
                    .positions
                    .iter()
                    .map(|&[x, y]| Position::in_unit_square(x, y).map(Place::point))
                    .collect::<Result<Vec<_>, _>>()?;
                (Arena::unit_square(params.vehicle_speed), places, SpawnArea::UnitSquare)
            }
            ArenaMode::RoadGraph => {
                let graph = config.graph().expect("road-graph configs carry their graph").clone();
                let mut places = Vec::with_capacity(st.nodes.len());
                for &n in &st.nodes {
                    let pos = graph.position(n).ok_or(GraphError::UnknownNode(n))?;
                    places.push(Place::at_node(n, pos));
                }
                let nodes = graph.node_ids().iter().map(|&n| (n, graph.position(n).expect("listed node"))).collect();
                let arena = Arena::road_graph(graph, params.vehicle_speed, &st.nodes)?;
                (arena, places, SpawnArea::Nodes(nodes))
            }
        };
        let seconds = (config.sim.horizon_s + config.renewables.tail_s) as usize;
        let pv = pv_profile(&config.renewables, seconds);
        Ok(Self { config: config.clone(), params, arena, station_places, spawn_area, pv })
    }

    fn profile_seconds(&self) -> usize {
        (self.config.sim.horizon_s + self.config.renewables.tail_s) as usize
    }

    /// Fresh stations for one run. Wind profiles depend on the seed.
    pub fn build_stations(&self, seed: u64) -> Vec<Station> {
        let st = &self.config.stations;
        self.station_places
            .iter()
            .zip(&st.renewables)
            .enumerate()
            .map(|(i, (place, kind))| {
                let profile = match kind {
                    RenewableKind::Pv => self.pv.clone(),
                    RenewableKind::Wind => {
                        let mut rng = stream_rng(seed, streams::RENEWABLES + i as u64);
                        wind_profile(&self.config.renewables, self.profile_seconds(), &mut rng)
                    }
                    RenewableKind::None => RenewableProfile::none(),
                };
                Station::new(i as StationId, *place, st.chargers, profile, st.tariff_eur_per_kwh)
                    .expect("validated configuration")
            })
            .collect()
    }
}

/// The random streams that drive vehicle generation.
pub struct SpawnStreams {
    counts: SimRng,
    positions: SimRng,
    energy: SimRng,
    weights: SimRng,
    next_id: VehicleId,
}

impl SpawnStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            counts: stream_rng(seed, streams::ARRIVAL_COUNTS),
            positions: stream_rng(seed, streams::SPAWN_POSITIONS),
            energy: stream_rng(seed, streams::ENERGY_REQUESTS),
            weights: stream_rng(seed, streams::WEIGHT_DRAWS),
            next_id: 0,
        }
    }
}

/// Vehicles appearing during `[now, now + dt)`: a Poisson count with mean
/// `arrival_rate * dt`, uniform positions, truncated-Gaussian requests and
/// weights from the configured distribution.
pub fn spawn_vehicles(scenario: &Scenario, streams: &mut SpawnStreams, now: SimTime, dt: f64) -> Vec<Vehicle> {
    let mean = scenario.params.arrival_rate_per_s * dt;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("positive finite mean").sample(&mut streams.counts) as usize;
    let e = &scenario.config.energy;
    (0..count)
        .map(|_| {
            let place = match &scenario.spawn_area {
                SpawnArea::UnitSquare => {
                    let (x, y) = (streams.positions.random::<f64>(), streams.positions.random::<f64>());
                    Place::point(Position { x, y })
                }
                SpawnArea::Nodes(nodes) => {
                    let (id, pos) = nodes[streams.positions.random_range(0..nodes.len())];
                    Place::at_node(id, pos)
                }
            };
            let request = sample_energy_request(&mut streams.energy, e.mean_kwh, e.std_kwh, e.min_kwh, e.max_kwh);
            let weights = draw_weights(&scenario.config.weights, &mut streams.weights);
            let id = streams.next_id;
            streams.next_id += 1;
            Vehicle { id, place, request, weights, spawn_time: now, compliant_draw: None }
        })
        .collect()
}

fn draw_weights(cfg: &WeightsConfig, rng: &mut SimRng) -> PreferenceWeights {
    match cfg {
        WeightsConfig::Fixed { alpha } => *alpha,
        WeightsConfig::Mixture { components } => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for c in components {
                acc += c.share;
                if u < acc {
                    return c.alpha;
                }
            }
            components.last().expect("validated non-empty").alpha
        }
        WeightsConfig::Sweep { .. } => unreachable!("rejected by Scenario::prepare"),
    }
}

/// One run with seed `seed`. With `check_every = Some(k)` the queue and
/// energy invariants are checked every `k` steps and at the end.
pub fn run_scenario_checked(
    scenario: &Scenario,
    run: u64,
    seed: u64,
    check_every: Option<SimTime>,
) -> Result<RunResult, EngineError> {
    let mut world = World::new(scenario, seed);
    let mut spawns = SpawnStreams::new(seed);
    let check = |w: &World| -> Result<(), EngineError> {
        w.check_queue_accounting(1e-6).map_err(EngineError::Invariant)?;
        w.check_energy_conservation(1e-6).map_err(EngineError::Invariant)?;
        if let Some(l) = w.ledger() {
            l.check_invariants().map_err(EngineError::Invariant)?;
        }
        Ok(())
    };
    for t in 0..scenario.config.sim.horizon_s {
        world.begin_step();
        for v in spawn_vehicles(scenario, &mut spawns, t, 1.0) {
            world.admit(v)?;
        }
        world.step()?;
        if check_every.is_some_and(|k| t % k == 0) {
            check(&world)?;
        }
    }
    if check_every.is_some() {
        check(&world)?;
    }
    Ok(finish(scenario, run, seed, world))
}

pub fn run_scenario(scenario: &Scenario, run: u64, seed: u64) -> Result<RunResult, EngineError> {
    run_scenario_checked(scenario, run, seed, None)
}

/// `n_runs` independent runs with seeds `base_seed + k`, in run order.
pub fn run_monte_carlo(scenario: &Scenario, n_runs: usize, base_seed: u64) -> Result<Vec<RunResult>, EngineError> {
    (0..n_runs as u64).into_par_iter().map(|k| run_scenario(scenario, k, base_seed.wrapping_add(k))).collect()
}

fn finish(scenario: &Scenario, run: u64, seed: u64, world: World) -> RunResult {
    let horizon = scenario.config.sim.horizon_s;
    let parts = world.into_parts();
    let stations = parts
        .stations
        .iter()
        .map(|s| StationSummary {
            id: s.id,
            kind: s.renewable.kind,
            x: s.place.position.x,
            y: s.place.position.y,
            node: s.place.node,
            chargers: s.chargers,
            renewable_generated_kwh: s.renewable.energy_between(0, horizon),
        })
        .collect();
    RunResult {
        run,
        seed,
        params: scenario.params,
        horizon_s: horizon,
        vehicles: parts.records,
        stations,
        samples: parts.samples,
        controller: parts.controller_trace,
        events: parts.events,
        ledger: parts.ledger,
        delivered_kwh: parts.delivered_kwh,
    }
}
