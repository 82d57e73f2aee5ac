//! Normalized cost components and the personalized aggregate cost of
//! charging a given vehicle at a given station.
//!
//! All three components are dimensionless. The time component is not
//! clamped: long queues push it above one, which keeps the ordering between
//! congested stations intact.

use crate::domain::{SimParams, SimTime, Station, VehicleBroadcast};
use crate::mobility::TravelEstimate;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("energy request must be strictly positive")]
    ZeroRequest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub t_component: f64,
    pub p_component: f64,
    pub d_component: f64,
    pub aggregate: f64,
    /// Renewable energy the station expects to generate while this vehicle
    /// charges (kWh). Carried along so the realized price matches the quote.
    pub renewable_forecast_kwh: f64,
}

/// Total time to be served (travel plus draining the queue including the
/// vehicle's own request), normalized by `m_max_s`.
pub fn time_component(queued_energy_kwh: f64, request_kwh: f64, travel_time_s: f64, params: &SimParams) -> f64 {
    ((queued_energy_kwh + request_kwh) / params.charge_rate_kwh_per_s + travel_time_s) / params.m_max_s
}

/// Price in euro of the grid share of a request: renewable energy is free.
pub fn price_eur(request_kwh: f64, res_forecast_kwh: f64, tariff: f64) -> f64 {
    tariff * (request_kwh - res_forecast_kwh).max(0.0)
}

pub fn price_component(request_kwh: f64, res_forecast_kwh: f64) -> Result<f64, CostError> {
    if !(request_kwh > 0.0) {
        return Err(CostError::ZeroRequest);
    }
    Ok((request_kwh - res_forecast_kwh).max(0.0) / request_kwh)
}

pub fn distance_component(dist: f64, d_max: f64) -> f64 {
    dist / d_max
}

/// Estimated charging window `[start, end)` for a new request at `station`,
/// assuming FIFO service on all chargers and arrival after `travel_time_s`.
pub fn charging_window(
    station: &Station,
    now: SimTime,
    travel_time_s: f64,
    request_kwh: f64,
    params: &SimParams,
) -> (SimTime, SimTime) {
    let rate = params.charge_rate_kwh_per_s;
    let drain_s = station.queued_energy_kwh / (station.chargers as f64 * rate);
    let start = now + travel_time_s.max(drain_s).ceil() as SimTime;
    let end = start + (request_kwh / rate).ceil() as SimTime;
    (start, end)
}

/// Renewable energy the station will generate during the vehicle's
/// estimated charging window (perfect foresight).
pub fn renewable_forecast_kwh(
    station: &Station,
    now: SimTime,
    travel_time_s: f64,
    request_kwh: f64,
    params: &SimParams,
) -> f64 {
    let (start, end) = charging_window(station, now, travel_time_s, request_kwh, params);
    station.renewable.energy_between(start, end)
}

/// Combines the three components with the vehicle's weights.
pub fn combine(vehicle: &VehicleBroadcast, t: f64, p: f64, d: f64) -> f64 {
    let w = &vehicle.weights;
    w.time() * t + w.price() * p + w.dist() * d
}

/// Cost of serving `vehicle` at `station`, using only the station's own
/// state and the vehicle's broadcast.
pub fn aggregate_cost(
    vehicle: &VehicleBroadcast,
    station: &Station,
    travel: &TravelEstimate,
    params: &SimParams,
    now: SimTime,
) -> Result<CostBreakdown, CostError> {
    let m = vehicle.request_kwh;
    let res = renewable_forecast_kwh(station, now, travel.travel_time_s, m, params);
    let t = time_component(station.queued_energy_kwh, m, travel.travel_time_s, params);
    let p = price_component(m, res)?;
    let d = distance_component(travel.distance, params.d_max);
    Ok(CostBreakdown {
        t_component: t,
        p_component: p,
        d_component: d,
        aggregate: combine(vehicle, t, p, d),
        renewable_forecast_kwh: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Place, Position, PreferenceWeights, RenewableKind, RenewableProfile};
    use proptest::prelude::*;

    fn params() -> SimParams {
        SimParams::unit_square_defaults()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn time_component_examples() {
        let p = params();
        let t = time_component(0.0, 8.0, 0.0, &p);
        assert!(close(t, 0.364, 5e-4), "{t}");
        assert!(close(t * p.m_max_s, 1311.5, 1.0));
        assert_eq!(time_component(0.0, 0.0, 0.0, &p), 0.0);
        // ((15 / 0.0061) + 300) / 3600
        assert!(close(time_component(10.0, 5.0, 300.0, &p), 0.7664, 1e-4));
    }

    #[test]
    fn price_examples() {
        assert!(close(price_eur(5.0, 0.0, 0.45), 2.25, 1e-12));
        assert_eq!(price_eur(5.0, 5.0, 0.45), 0.0);
        assert_eq!(price_eur(5.0, 9.0, 0.45), 0.0);
        assert!(close(price_component(5.0, 2.0).unwrap(), 0.6, 1e-12));
        assert_eq!(price_component(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(price_component(5.0, 0.0).unwrap(), 1.0);
        assert_eq!(price_component(0.0, 1.0), Err(CostError::ZeroRequest));
    }

    #[test]
    fn distance_examples() {
        let d_max = std::f64::consts::SQRT_2;
        assert_eq!(distance_component(0.0, d_max), 0.0);
        assert_eq!(distance_component(d_max, d_max), 1.0);
        assert!(close(distance_component(d_max / 2.0, d_max), 0.5, 1e-12));
    }

    fn station_with(renewable: RenewableProfile, queued: f64) -> Station {
        let mut s = Station::new(0, Place::point(Position { x: 0.0, y: 0.0 }), 1, renewable, 0.45).unwrap();
        s.queued_energy_kwh = queued;
        s
    }

    fn broadcast(weights: PreferenceWeights, m: f64) -> VehicleBroadcast {
        VehicleBroadcast {
            vehicle_id: 1,
            place: Place::point(Position { x: 0.5, y: 0.5 }),
            request_kwh: m,
            weights,
        }
    }

    #[test]
    fn aggregate_examples() {
        let p = params();
        // plenty of renewable energy: price component is zero
        let sunny = RenewableProfile::from_series(RenewableKind::Pv, 10.0, &vec![0.01; 20_000]);
        let s = station_with(sunny, 30.0);
        let travel = TravelEstimate { distance: 1.2, travel_time_s: 60.0 };
        let c = aggregate_cost(&broadcast(PreferenceWeights::ALL_PRICE, 5.0), &s, &travel, &p, 0).unwrap();
        assert_eq!(c.aggregate, 0.0);

        let s = station_with(RenewableProfile::none(), 0.0);
        let far = TravelEstimate { distance: p.d_max, travel_time_s: 70.0 };
        let c = aggregate_cost(&broadcast(PreferenceWeights::ALL_DISTANCE, 5.0), &s, &far, &p, 0).unwrap();
        assert_eq!(c.aggregate, 1.0);

        let v = broadcast(PreferenceWeights::equal(), 5.0);
        assert!(close(combine(&v, 0.364, 1.0, 0.5), 0.6213, 1e-4));
    }

    #[test]
    fn forecast_covers_charging_window() {
        let p = params();
        // 1 kWh per second from t = 100 onwards
        let mut series = vec![0.0; 100];
        series.extend(vec![1.0; 10_000]);
        let mut s = station_with(RenewableProfile::from_series(RenewableKind::Pv, 10.0, &series), 0.0);
        // travel 50 s, charge 1 kWh = 164 s: window [50, 214) overlaps 114 s of generation
        let w = charging_window(&s, 0, 50.0, 1.0, &p);
        assert_eq!(w, (50, 50 + (1.0f64 / 0.0061).ceil() as u64));
        assert!(close(renewable_forecast_kwh(&s, 0, 50.0, 1.0, &p), 114.0, 1e-9));
        // a queue longer than the trip delays the window
        s.queued_energy_kwh = 0.61;
        assert_eq!(charging_window(&s, 0, 50.0, 1.0, &p).0, 100);
    }

    proptest! {
        #[test]
        fn zero_weight_insensitivity(
            queued in 0.0f64..50.0, dq in 0.0f64..50.0,
            dist in 0.0f64..1.4, dd in 0.0f64..1.0,
            m in 0.5f64..8.0,
        ) {
            let p = params();
            let v = broadcast(PreferenceWeights::new(0.0, 0.0, 1.0).unwrap(), m);
            let travel = TravelEstimate { distance: dist, travel_time_s: dist / p.vehicle_speed };
            let a = aggregate_cost(&v, &station_with(RenewableProfile::none(), queued), &travel, &p, 0).unwrap();
            let b = aggregate_cost(&v, &station_with(RenewableProfile::none(), queued + dq), &travel, &p, 0).unwrap();
            prop_assert_eq!(a.aggregate, b.aggregate);

            let v = broadcast(PreferenceWeights::new(1.0, 0.0, 0.0).unwrap(), m);
            let near = TravelEstimate { distance: dist, travel_time_s: 10.0 };
            let farther = TravelEstimate { distance: dist + dd, travel_time_s: 10.0 };
            let s = station_with(RenewableProfile::none(), queued);
            prop_assert_eq!(
                aggregate_cost(&v, &s, &near, &p, 0).unwrap().aggregate,
                aggregate_cost(&v, &s, &farther, &p, 0).unwrap().aggregate
            );
        }

        #[test]
        fn monotone_in_queue_distance_and_grid_share(
            a in 0.01f64..1.0, b in 0.0f64..1.0,
            queued in 0.0f64..50.0, dq in 0.0f64..50.0,
            dist in 0.0f64..1.0, dd in 0.0f64..0.4,
            m in 0.5f64..8.0, res in 0.0f64..8.0, dres in 0.0f64..8.0,
        ) {
            let p = params();
            let rest = 1.0 - a;
            let w = PreferenceWeights::new(a, rest * b, rest * (1.0 - b)).unwrap();
            let v = broadcast(w, m);
            let f = |q: f64, d: f64, r: f64| {
                let t = time_component(q, m, d / p.vehicle_speed, &p);
                combine(&v, t, price_component(m, r).unwrap(), distance_component(d, p.d_max))
            };
            let base = f(queued, dist, res + dres);
            prop_assert!(f(queued + dq, dist, res + dres) >= base);
            prop_assert!(f(queued, dist + dd, res + dres) >= base);
            // less renewable energy means a larger grid share
            prop_assert!(f(queued, dist, res) >= base);
        }

        #[test]
        fn affine_in_weights(t in 0.0f64..3.0, pc in 0.0f64..1.0, d in 0.0f64..1.0, lambda in 0.0f64..1.0) {
            let w1 = PreferenceWeights::new(0.2, 0.3, 0.5).unwrap();
            let w2 = PreferenceWeights::new(0.7, 0.1, 0.2).unwrap();
            let [a1, b1, _] = w1.as_array();
            let [a2, b2, _] = w2.as_array();
            let mix = PreferenceWeights::new(
                lambda * a1 + (1.0 - lambda) * a2,
                lambda * b1 + (1.0 - lambda) * b2,
                1.0 - (lambda * a1 + (1.0 - lambda) * a2) - (lambda * b1 + (1.0 - lambda) * b2),
            ).unwrap();
            let f = |w| combine(&broadcast(w, 5.0), t, pc, d);
            prop_assert!((f(mix) - (lambda * f(w1) + (1.0 - lambda) * f(w2))).abs() < 1e-9);
        }
    }
}
