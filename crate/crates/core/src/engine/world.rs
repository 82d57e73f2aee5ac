//! Simulation state and the per-second update.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::assignment::{argmin_bid, collect_bids, nearest_bid, run_green_signal_protocol};
use crate::compliance::{
    compliance_response, controller_step, estimate_compliance, resolve_compliance, ControllerSample, ControllerState,
};
use crate::config::{ComplianceMode, SolverKind};
use crate::cost::{price_eur, renewable_forecast_kwh};
use crate::domain::{SimTime, Station, StationId, Tokens, Vehicle, VehicleId};
use crate::ledger::{attest_position, AccountId, EscrowId, Ledger, LedgerError, PresenceOracle};
use crate::metrics::{StationSample, VehicleRecord};
use crate::rng::{stream_rng, streams, SimRng};

use super::{EngineError, Event, Scenario};

/// Remaining energy below this counts as delivered.
const ENERGY_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Charging {
    vehicle: VehicleId,
    remaining_kwh: f64,
}

#[derive(Debug, Clone, Copy)]
struct Trip {
    station: StationId,
    /// Whether the trip fulfils a commitment at `station`.
    committed: bool,
}

/// Energy reserved at a station for a vehicle that has not arrived. For a
/// defector this is a phantom entry, purged at the deadline.
#[derive(Debug, Clone, Copy)]
struct Commitment {
    station: StationId,
    energy_kwh: f64,
    deadline: SimTime,
    escrow: Option<EscrowId>,
}

/// Witnesses a physical arrival. Built only on the arrival path.
struct ArrivalWitness {
    vehicle: AccountId,
    station: StationId,
    time: SimTime,
}

impl PresenceOracle for ArrivalWitness {
    fn is_present(&self, vehicle: AccountId, station: StationId, time: SimTime) -> bool {
        vehicle == self.vehicle && station == self.station && time == self.time
    }
}

pub struct World<'a> {
    scenario: &'a Scenario,
    clock: SimTime,
    stations: Vec<Station>,
    queues: Vec<VecDeque<Charging>>,
    trips: BTreeMap<(SimTime, VehicleId), Trip>,
    commitments: BTreeMap<VehicleId, Commitment>,
    deadlines: BTreeSet<(SimTime, VehicleId)>,
    records: Vec<VehicleRecord>,
    events: Vec<Event>,
    samples: Vec<StationSample>,
    ledger: Option<Ledger>,
    controller: Option<ControllerState>,
    controller_trace: Vec<ControllerSample>,
    q_estimate: f64,
    protocol_rng: SimRng,
    compliance_rng: SimRng,
    delivered_kwh: f64,
    completed_kwh: f64,
}

impl<'a> World<'a> {
    pub fn new(scenario: &'a Scenario, seed: u64) -> Self {
        let cfg = &scenario.config;
        let stations = scenario.build_stations(seed);
        let ledger = cfg.ledger.enabled.then(|| {
            Ledger::new(
                Tokens::from_tokens(cfg.ledger.treasury_supply_tokens),
                cfg.ledger.pow_delay_steps,
                stream_rng(seed, streams::TIP_SELECTION),
            )
        });
        let c = &cfg.compliance;
        let controller = (c.mode == ComplianceMode::ClosedLoop)
            .then(|| ControllerState::new(c.initial_bond, c.target, c.gains(), c.bond_min, c.bond_max));
        Self {
            scenario,
            clock: 0,
            queues: vec![VecDeque::new(); stations.len()],
            stations,
            trips: BTreeMap::new(),
            commitments: BTreeMap::new(),
            deadlines: BTreeSet::new(),
            records: Vec::new(),
            events: Vec::new(),
            samples: Vec::new(),
            ledger,
            controller,
            controller_trace: Vec::new(),
            q_estimate: c.target,
            protocol_rng: stream_rng(seed, streams::PROTOCOL),
            compliance_rng: stream_rng(seed, streams::COMPLIANCE),
            delivered_kwh: 0.0,
            completed_kwh: 0.0,
        }
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn records(&self) -> &[VehicleRecord] {
        &self.records
    }

    pub fn ledger(&self) -> Option<&Ledger> {
        self.ledger.as_ref()
    }

    pub fn controller(&self) -> Option<&ControllerState> {
        self.controller.as_ref()
    }

    /// Number of vehicles physically at station `id`, charging or waiting.
    pub fn queue_len(&self, id: StationId) -> usize {
        self.queues[id as usize].len()
    }

    pub fn in_transit(&self) -> usize {
        self.trips.len()
    }

    pub fn delivered_kwh(&self) -> f64 {
        self.delivered_kwh
    }

    /// Bond a new vehicle would escrow now.
    pub fn current_bond(&self) -> f64 {
        match &self.controller {
            Some(state) => state.bond,
            None => self.scenario.config.compliance.fixed_bond,
        }
    }

    /// Compliance probability of a new vehicle now.
    pub fn current_compliance(&self) -> f64 {
        let c = &self.scenario.config.compliance;
        match c.mode {
            ComplianceMode::Off => 1.0,
            ComplianceMode::Fixed => c.q,
            ComplianceMode::ClosedLoop => compliance_response(&c.model(), self.current_bond()),
        }
    }

    /// Confirms ledger transactions whose proof of work is done.
    pub fn begin_step(&mut self) {
        if let Some(l) = self.ledger.as_mut() {
            l.tick(self.clock);
        }
    }

    /// Assigns a freshly spawned vehicle, resolves its compliance, escrows
    /// its bond and sends it on its way.
    pub fn admit(&mut self, vehicle: Vehicle) -> Result<(), EngineError> {
        let now = self.clock;
        let sc = self.scenario;
        let broadcast = vehicle.broadcast();
        let bids = collect_bids(&broadcast, &self.stations, &sc.arena, &sc.params, now)?;
        let (chosen, wait_steps) = match sc.config.solver.kind {
            SolverKind::Centralized => {
                let best = argmin_bid(&bids).expect("at least one station");
                (best.station_id as usize, 0)
            }
            SolverKind::Decentralized => {
                let (i, w) =
                    run_green_signal_protocol(&bids, &mut self.protocol_rng, sc.config.solver.max_protocol_steps)?;
                (bids[i].station_id as usize, w)
            }
        };
        let bid = bids[chosen];
        let nearest = *nearest_bid(&bids).expect("at least one station");
        let m = broadcast.request_kwh;
        let vid = vehicle.id;
        let account = AccountId::Vehicle(vid);
        self.events.push(Event::Spawn { time: now, vehicle: vid });

        let mut record = VehicleRecord::new(&vehicle);
        record.assigned_station = Some(bid.station_id);
        record.assignment_time = Some(now);
        record.wait_steps = wait_steps;
        record.assigned_distance = bid.travel.distance;
        record.assigned_cost = bid.cost.aggregate;
        self.events.push(Event::Assign { time: now, vehicle: vid, station: bid.station_id, wait_steps });

        let deadline = now + (bid.travel.travel_time_s * sc.config.compliance.deadline_slack).ceil() as SimTime;
        let bond = self.current_bond();
        let mut escrow = None;
        let mut participant = true;
        if let Some(ledger) = self.ledger.as_mut() {
            let endowment = Tokens::from_tokens(sc.config.endowment_tokens());
            ledger.transfer(AccountId::Treasury, account, endowment, now)?;
            match ledger.open_escrow(account, bid.station_id, Tokens::from_tokens(bond), deadline, now) {
                Ok(contract) => escrow = Some(contract.id),
                Err(LedgerError::InsufficientBalance { .. }) => participant = false,
                Err(e) => return Err(e.into()),
            }
        }

        let (target, travel, committed) = if participant {
            let q = self.current_compliance();
            let decision = resolve_compliance(bid.station_id, nearest.station_id, q, &mut self.compliance_rng);
            record.defected = decision.defected;
            record.bond_tokens = if escrow.is_some() { bond } else { 0.0 };
            record.escrow = escrow;
            self.stations[bid.station_id as usize].queued_energy_kwh += m;
            self.commitments.insert(vid, Commitment { station: bid.station_id, energy_kwh: m, deadline, escrow });
            self.deadlines.insert((deadline, vid));
            if decision.defected {
                self.events.push(Event::Defect { time: now, vehicle: vid, station: nearest.station_id });
                (nearest.station_id, nearest.travel, false)
            } else {
                record.renewable_kwh = bid.cost.renewable_forecast_kwh.min(m);
                (bid.station_id, bid.travel, true)
            }
        } else {
            record.participant = false;
            (nearest.station_id, nearest.travel, false)
        };
        record.target_station = Some(target);
        let arrival = now + travel.travel_time_s.ceil() as SimTime;
        self.trips.insert((arrival, vid), Trip { station: target, committed });
        debug_assert_eq!(self.records.len() as u64, vid, "vehicle ids are dense and sequential");
        self.records.push(record);
        Ok(())
    }

    /// Advances the world by one second: arrivals, expired commitments,
    /// charging, sampling.
    pub fn step(&mut self) -> Result<(), EngineError> {
        let now = self.clock;
        while let Some(entry) = self.trips.first_entry() {
            if entry.key().0 > now {
                break;
            }
            let ((_, vid), trip) = entry.remove_entry();
            self.arrive(vid, trip)?;
        }
        while let Some(&(deadline, vid)) = self.deadlines.first() {
            if deadline >= now {
                break;
            }
            self.deadlines.pop_first();
            self.expire(vid)?;
        }
        self.charge(now);
        if now.is_multiple_of(self.scenario.config.sim.sample_interval_s) {
            self.sample(now);
        }
        self.clock += 1;
        Ok(())
    }

    fn arrive(&mut self, vid: VehicleId, trip: Trip) -> Result<(), EngineError> {
        let now = self.clock;
        let idx = trip.station as usize;
        let m = self.records[vid as usize].request_kwh;
        self.events.push(Event::Arrive { time: now, vehicle: vid, station: trip.station });
        if trip.committed {
            let c = self.commitments.remove(&vid).expect("committed trip has a commitment");
            self.deadlines.remove(&(c.deadline, vid));
            if let (Some(id), Some(ledger)) = (c.escrow, self.ledger.as_mut()) {
                let account = AccountId::Vehicle(vid);
                let witness = ArrivalWitness { vehicle: account, station: trip.station, time: now };
                let pop = attest_position(trip.station, account, trip.station, now, &witness)?;
                ledger.settle_escrow(id, Some(&pop), now)?;
                self.events.push(Event::Settle { time: now, vehicle: vid, returned: true });
                self.after_settlement();
            }
        } else {
            // unannounced arrival: quoted on the spot, before joining
            let params = &self.scenario.params;
            let res = renewable_forecast_kwh(&self.stations[idx], now, 0.0, m, params);
            self.records[vid as usize].renewable_kwh = res.min(m);
            self.stations[idx].queued_energy_kwh += m;
        }
        let record = &mut self.records[vid as usize];
        record.arrival_time = Some(now);
        record.price_eur = price_eur(m, record.renewable_kwh, self.stations[idx].tariff_eur_per_kwh);
        self.queues[idx].push_back(Charging { vehicle: vid, remaining_kwh: m });
        Ok(())
    }

    fn expire(&mut self, vid: VehicleId) -> Result<(), EngineError> {
        let now = self.clock;
        let c = self.commitments.remove(&vid).expect("deadline belongs to an open commitment");
        let st = &mut self.stations[c.station as usize];
        st.queued_energy_kwh = (st.queued_energy_kwh - c.energy_kwh).max(0.0);
        self.events.push(Event::Purge { time: now, vehicle: vid, station: c.station });
        if let (Some(id), Some(ledger)) = (c.escrow, self.ledger.as_mut()) {
            ledger.settle_escrow(id, None, now)?;
            self.events.push(Event::Settle { time: now, vehicle: vid, returned: false });
            self.after_settlement();
        }
        Ok(())
    }

    fn after_settlement(&mut self) {
        let (Some(state), Some(ledger)) = (self.controller.as_mut(), self.ledger.as_ref()) else {
            return;
        };
        let c = &self.scenario.config.compliance;
        let settlements = ledger.settlements();
        if settlements.len() % c.cadence != 0 {
            return;
        }
        self.q_estimate = estimate_compliance(settlements, c.window, self.q_estimate);
        *state = controller_step(state, self.q_estimate);
        self.controller_trace.push(ControllerSample {
            time: self.clock,
            settlements: settlements.len(),
            q_measured: self.q_estimate,
            q_model: compliance_response(&c.model(), state.bond),
            bond: state.bond,
        });
    }

    fn charge(&mut self, now: SimTime) {
        let rate = self.scenario.params.charge_rate_kwh_per_s;
        for (idx, queue) in self.queues.iter_mut().enumerate() {
            let station = &mut self.stations[idx];
            let active = queue.len().min(station.chargers as usize);
            let mut finished = false;
            for entry in queue.iter_mut().take(active) {
                let record = &mut self.records[entry.vehicle as usize];
                if record.charge_start.is_none() {
                    record.charge_start = Some(now);
                }
                let delta = rate.min(entry.remaining_kwh);
                entry.remaining_kwh -= delta;
                self.delivered_kwh += delta;
                station.queued_energy_kwh -= delta;
                if entry.remaining_kwh <= ENERGY_EPS {
                    station.queued_energy_kwh -= entry.remaining_kwh;
                    entry.remaining_kwh = 0.0;
                    record.charge_end = Some(now + 1);
                    self.completed_kwh += record.request_kwh;
                    self.events.push(Event::ChargeEnd { time: now + 1, vehicle: entry.vehicle, station: station.id });
                    finished = true;
                }
            }
            if finished {
                queue.retain(|e| e.remaining_kwh > 0.0);
            }
            if queue.is_empty() && station.queued_energy_kwh.abs() < 1e-9 {
                station.queued_energy_kwh = 0.0;
            }
        }
    }

    fn sample(&mut self, now: SimTime) {
        for (idx, st) in self.stations.iter().enumerate() {
            self.samples.push(StationSample {
                time: now,
                station: st.id,
                queue_len: self.queues[idx].len(),
                queued_energy_kwh: st.queued_energy_kwh,
                renewable_kw: st.renewable.generation_at(now) * 3600.0,
            });
        }
    }

    /// Committed energy at each station equals what is physically queued
    /// there plus what is still on its way or reserved.
    pub fn check_queue_accounting(&self, tolerance: f64) -> Result<(), String> {
        let mut expected: Vec<f64> = self.queues.iter().map(|q| q.iter().map(|e| e.remaining_kwh).sum()).collect();
        for c in self.commitments.values() {
            expected[c.station as usize] += c.energy_kwh;
        }
        for (st, want) in self.stations.iter().zip(expected) {
            if (st.queued_energy_kwh - want).abs() > tolerance {
                return Err(format!(
                    "station {} at t={} reports {} kWh queued, accounting gives {want}",
                    st.id, self.clock, st.queued_energy_kwh
                ));
            }
        }
        Ok(())
    }

    /// Energy delivered equals completed requests plus partial deliveries.
    pub fn check_energy_conservation(&self, tolerance: f64) -> Result<(), String> {
        let partial: f64 = self
            .queues
            .iter()
            .flat_map(|q| q.iter())
            .map(|e| self.records[e.vehicle as usize].request_kwh - e.remaining_kwh)
            .sum();
        let accounted = self.completed_kwh + partial;
        if (self.delivered_kwh - accounted).abs() > tolerance {
            return Err(format!("delivered {} kWh but accounted for {accounted} kWh", self.delivered_kwh));
        }
        Ok(())
    }

    pub(super) fn into_parts(self) -> WorldParts {
        WorldParts {
            stations: self.stations,
            records: self.records,
            events: self.events,
            samples: self.samples,
            ledger: self.ledger,
            controller_trace: self.controller_trace,
            delivered_kwh: self.delivered_kwh,
        }
    }
}

pub(super) struct WorldParts {
    pub stations: Vec<Station>,
    pub records: Vec<VehicleRecord>,
    pub events: Vec<Event>,
    pub samples: Vec<StationSample>,
    pub ledger: Option<Ledger>,
    pub controller_trace: Vec<ControllerSample>,
    pub delivered_kwh: f64,
}
