//! Vehicle-to-station assignment.
//!
//! Two solvers share the same station interface. The centralized one sees
//! every station's cost and takes the argmin. The decentralized one runs the
//! green-signal protocol: each station, knowing only the vehicle broadcast and
//! its own state, announces itself at every protocol step with probability
//! `10^(-F)`; the vehicle takes the first announcement it hears, preferring
//! the nearest station when several arrive in the same step.

use std::cmp::Ordering;

use rand::Rng;

use crate::cost::{aggregate_cost, CostBreakdown, CostError};
use crate::domain::{SimParams, SimTime, Station, StationId, VehicleBroadcast, VehicleId};
use crate::mobility::{Arena, MobilityError, TravelEstimate};

/// Default cap on protocol steps before giving up.
pub const DEFAULT_MAX_PROTOCOL_STEPS: u32 = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssignmentError {
    #[error("no charging stations available")]
    NoStations,
    #[error("no green signal received within {0} protocol steps")]
    StepLimitExceeded(u32),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
}

/// A station's answer to a vehicle broadcast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationBid {
    pub station_id: StationId,
    pub cost: CostBreakdown,
    pub travel: TravelEstimate,
}

/// Something that can price a vehicle broadcast on behalf of one station.
///
/// Implementations receive the broadcast and the public map only. Nothing in
/// this signature gives access to other stations.
pub trait StationEvaluator: Sync {
    fn station_id(&self) -> StationId;

    fn evaluate(
        &self,
        broadcast: &VehicleBroadcast,
        arena: &Arena,
        params: &SimParams,
        now: SimTime,
    ) -> Result<StationBid, AssignmentError>;
}

impl StationEvaluator for Station {
    fn station_id(&self) -> StationId {
        self.id
    }

    fn evaluate(
        &self,
        broadcast: &VehicleBroadcast,
        arena: &Arena,
        params: &SimParams,
        now: SimTime,
    ) -> Result<StationBid, AssignmentError> {
        let travel = arena.estimate(&broadcast.place, &self.place)?;
        let cost = aggregate_cost(broadcast, self, &travel, params, now)?;
        Ok(StationBid { station_id: self.id, cost, travel })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignmentOutcome {
    pub vehicle_id: VehicleId,
    pub station_id: StationId,
    /// Protocol steps without any green signal before the one that assigned
    /// the vehicle. Always zero for the centralized solver.
    pub wait_steps: u32,
    pub cost_at_assignment: CostBreakdown,
    pub travel: TravelEstimate,
}

pub fn collect_bids<S: StationEvaluator>(
    broadcast: &VehicleBroadcast,
    stations: &[S],
    arena: &Arena,
    params: &SimParams,
    now: SimTime,
) -> Result<Vec<StationBid>, AssignmentError> {
    if stations.is_empty() {
        return Err(AssignmentError::NoStations);
    }
    stations.iter().map(|s| s.evaluate(broadcast, arena, params, now)).collect()
}

fn nearer(a: &StationBid, b: &StationBid) -> Ordering {
    a.travel.distance.total_cmp(&b.travel.distance).then(a.station_id.cmp(&b.station_id))
}

/// Lowest aggregate cost; ties go to the nearer station, then the smaller id.
pub fn argmin_bid(bids: &[StationBid]) -> Option<&StationBid> {
    bids.iter().min_by(|a, b| a.cost.aggregate.total_cmp(&b.cost.aggregate).then_with(|| nearer(a, b)))
}

/// Nearest station; ties go to the smaller id.
pub fn nearest_bid(bids: &[StationBid]) -> Option<&StationBid> {
    bids.iter().min_by(|a, b| nearer(a, b))
}

pub fn centralized_assign<S: StationEvaluator>(
    broadcast: &VehicleBroadcast,
    stations: &[S],
    arena: &Arena,
    params: &SimParams,
    now: SimTime,
) -> Result<AssignmentOutcome, AssignmentError> {
    let bids = collect_bids(broadcast, stations, arena, params, now)?;
    let best = argmin_bid(&bids).ok_or(AssignmentError::NoStations)?;
    Ok(AssignmentOutcome {
        vehicle_id: broadcast.vehicle_id,
        station_id: best.station_id,
        wait_steps: 0,
        cost_at_assignment: best.cost,
        travel: best.travel,
    })
}

/// Per-step probability that a station announces itself.
pub fn green_signal_probability(cost: &CostBreakdown) -> f64 {
    10f64.powf(-cost.aggregate)
}

/// Runs the signalling loop over precomputed bids. Costs stay fixed for the
/// whole loop.
pub fn run_green_signal_protocol<R: Rng + ?Sized>(
    bids: &[StationBid],
    rng: &mut R,
    max_steps: u32,
) -> Result<(usize, u32), AssignmentError> {
    if bids.is_empty() {
        return Err(AssignmentError::NoStations);
    }
    let probs: Vec<f64> = bids.iter().map(|b| green_signal_probability(&b.cost)).collect();
    for step in 0..max_steps {
        let mut chosen: Option<usize> = None;
        for (i, &p) in probs.iter().enumerate() {
            // every station draws, even after one has fired, so that the
            // stations' draws stay independent of each other
            let fired = rng.random::<f64>() < p;
            if fired && chosen.is_none_or(|c| nearer(&bids[i], &bids[c]) == Ordering::Less) {
                chosen = Some(i);
            }
        }
        if let Some(i) = chosen {
            return Ok((i, step));
        }
    }
    Err(AssignmentError::StepLimitExceeded(max_steps))
}

#[allow(clippy::too_many_arguments)]
pub fn decentralized_assign<S: StationEvaluator, R: Rng + ?Sized>(
    broadcast: &VehicleBroadcast,
    stations: &[S],
    arena: &Arena,
    params: &SimParams,
    now: SimTime,
    rng: &mut R,
    max_steps: u32,
) -> Result<AssignmentOutcome, AssignmentError> {
    let bids = collect_bids(broadcast, stations, arena, params, now)?;
    let (i, wait_steps) = run_green_signal_protocol(&bids, rng, max_steps)?;
    let bid = &bids[i];
    Ok(AssignmentOutcome {
        vehicle_id: broadcast.vehicle_id,
        station_id: bid.station_id,
        wait_steps,
        cost_at_assignment: bid.cost,
        travel: bid.travel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Place, Position, PreferenceWeights, RenewableProfile};
    use crate::rng::stream_rng;
    use std::sync::Mutex;

    fn station(id: StationId, x: f64, y: f64, queued: f64) -> Station {
        let mut s = Station::new(id, Place::point(Position { x, y }), 1, RenewableProfile::none(), 0.45).unwrap();
        s.queued_energy_kwh = queued;
        s
    }

    fn vehicle(weights: PreferenceWeights) -> VehicleBroadcast {
        VehicleBroadcast {
            vehicle_id: 7,
            place: Place::point(Position { x: 0.0, y: 0.0 }),
            request_kwh: 5.0,
            weights,
        }
    }

    fn bid(id: StationId, aggregate: f64, distance: f64) -> StationBid {
        StationBid {
            station_id: id,
            cost: CostBreakdown {
                t_component: aggregate,
                p_component: 0.0,
                d_component: 0.0,
                aggregate,
                renewable_forecast_kwh: 0.0,
            },
            travel: TravelEstimate { distance, travel_time_s: distance },
        }
    }

    #[test]
    fn no_stations() {
        let arena = Arena::unit_square(0.02);
        let p = SimParams::unit_square_defaults();
        let empty: [Station; 0] = [];
        let v = vehicle(PreferenceWeights::ALL_TIME);
        assert_eq!(centralized_assign(&v, &empty, &arena, &p, 0), Err(AssignmentError::NoStations));
        let mut rng = stream_rng(0, 4);
        assert_eq!(
            decentralized_assign(&v, &empty, &arena, &p, 0, &mut rng, 10),
            Err(AssignmentError::NoStations)
        );
    }

    #[test]
    fn centralized_examples() {
        let arena = Arena::unit_square(0.02);
        let p = SimParams::unit_square_defaults();
        let only = [station(4, 0.5, 0.5, 3.0)];
        let out = centralized_assign(&vehicle(PreferenceWeights::ALL_TIME), &only, &arena, &p, 0).unwrap();
        assert_eq!((out.station_id, out.wait_steps), (4, 0));

        let three = [station(0, 0.9, 0.0, 0.0), station(1, 0.2, 0.0, 0.0), station(2, 0.5, 0.0, 0.0)];
        let out = centralized_assign(&vehicle(PreferenceWeights::ALL_DISTANCE), &three, &arena, &p, 0).unwrap();
        assert_eq!(out.station_id, 1);

        // A: 10 kWh queued, 100 s away; B: 4 kWh queued, 600 s away
        let a = station(0, 100.0 * p.vehicle_speed, 0.0, 10.0);
        let b = station(1, 600.0 * p.vehicle_speed, 0.0, 4.0);
        let cost_a = (15.0 / 0.0061 + 100.0) / 3600.0;
        let cost_b = (9.0 / 0.0061 + 600.0) / 3600.0;
        assert!(cost_b < cost_a);
        let out = centralized_assign(&vehicle(PreferenceWeights::ALL_TIME), &[a, b], &arena, &p, 0).unwrap();
        assert_eq!(out.station_id, 1);
        assert!((out.cost_at_assignment.aggregate - cost_b).abs() < 1e-9);
    }

    #[test]
    fn argmin_tie_breaks_by_distance_then_id() {
        let bids = [bid(5, 0.3, 0.4), bid(2, 0.3, 0.2), bid(1, 0.3, 0.2), bid(0, 0.5, 0.0)];
        assert_eq!(argmin_bid(&bids).unwrap().station_id, 1);
        let mut reversed = bids;
        reversed.reverse();
        assert_eq!(argmin_bid(&reversed).unwrap().station_id, 1);
    }

    #[test]
    fn green_signal_examples() {
        let p = |f| green_signal_probability(&bid(0, f, 0.0).cost);
        assert_eq!(p(0.0), 1.0);
        assert!((p(1.0) - 0.1).abs() < 1e-15);
        assert!((p(0.5) - 0.316_227_766).abs() < 1e-9);
    }

    #[test]
    fn certain_signal_assigns_immediately() {
        let mut rng = stream_rng(1, 4);
        assert_eq!(run_green_signal_protocol(&[bid(3, 0.0, 1.0)], &mut rng, 5).unwrap(), (0, 0));
    }

    #[test]
    fn step_limit() {
        let mut rng = stream_rng(1, 4);
        let hopeless = [bid(0, 300.0, 0.0)];
        assert_eq!(
            run_green_signal_protocol(&hopeless, &mut rng, 25),
            Err(AssignmentError::StepLimitExceeded(25))
        );
    }

    #[test]
    fn same_step_signals_go_to_nearest() {
        let mut rng = stream_rng(1, 4);
        let both_certain = [bid(0, 0.0, 0.8), bid(1, 0.0, 0.3), bid(2, 0.0, 0.3)];
        assert_eq!(run_green_signal_protocol(&both_certain, &mut rng, 5).unwrap(), (1, 0));
    }

    /// Records what each evaluator was handed.
    struct SpyStation {
        id: StationId,
        seen: Mutex<Vec<VehicleId>>,
        aggregate: f64,
    }

    impl StationEvaluator for SpyStation {
        fn station_id(&self) -> StationId {
            self.id
        }

        fn evaluate(
            &self,
            broadcast: &VehicleBroadcast,
            _arena: &Arena,
            _params: &SimParams,
            _now: SimTime,
        ) -> Result<StationBid, AssignmentError> {
            self.seen.lock().unwrap().push(broadcast.vehicle_id);
            Ok(bid(self.id, self.aggregate, self.id as f64))
        }
    }

    #[test]
    fn evaluators_only_see_the_broadcast() {
        let spies: Vec<SpyStation> =
            (0..3).map(|id| SpyStation { id, seen: Mutex::new(Vec::new()), aggregate: 0.2 * id as f64 }).collect();
        let arena = Arena::unit_square(0.02);
        let p = SimParams::unit_square_defaults();
        let mut rng = stream_rng(9, 4);
        let out =
            decentralized_assign(&vehicle(PreferenceWeights::ALL_TIME), &spies, &arena, &p, 0, &mut rng, 100).unwrap();
        assert!(out.station_id < 3);
        for s in &spies {
            // each evaluator is asked exactly once per request
            assert_eq!(*s.seen.lock().unwrap(), vec![7]);
        }
    }

    #[test]
    fn reproducible_with_seed() {
        let bids: Vec<StationBid> = (0..12).map(|i| bid(i, 0.1 * i as f64, 0.05 * i as f64)).collect();
        let trace = |seed| {
            let mut rng = stream_rng(seed, 4);
            (0..200).map(|_| run_green_signal_protocol(&bids, &mut rng, 1000).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(trace(42), trace(42));
    }

    #[test]
    fn lower_cost_wins_more_often() {
        let bids = [bid(0, 0.2, 0.5), bid(1, 0.5, 0.5), bid(2, 0.9, 0.5)];
        let mut rng = stream_rng(5, 4);
        let mut counts = [0u32; 3];
        for _ in 0..10_000 {
            counts[run_green_signal_protocol(&bids, &mut rng, 1000).unwrap().0] += 1;
        }
        assert!(counts[0] > counts[1] && counts[1] > counts[2], "{counts:?}");
    }
}
