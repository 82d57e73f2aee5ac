//! Prices one charging request at three stations and shows each cost term.

use evcharge::assignment::{argmin_bid, collect_bids, green_signal_probability};
use evcharge::domain::{
    EnergyRequest, Place, Position, PreferenceWeights, RenewableKind, RenewableProfile, SimParams, Station, Vehicle,
};
use evcharge::mobility::Arena;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SimParams::unit_square_defaults();
    let arena = Arena::unit_square(params.vehicle_speed);

    // 5 kW flat for a day, as kWh per second
    let flat = vec![5.0 / 3600.0; 86_400];
    let mut stations = vec![
        Station::new(0, Place::point(Position::in_unit_square(0.2, 0.2)?), 2, RenewableProfile::none(), 0.45)?,
        Station::new(1, Place::point(Position::in_unit_square(0.8, 0.3)?), 2, RenewableProfile::from_series(RenewableKind::Pv, 5.0, &flat), 0.45)?,
        Station::new(2, Place::point(Position::in_unit_square(0.5, 0.9)?), 2, RenewableProfile::none(), 0.45)?,
    ];
    stations[0].queued_energy_kwh = 18.0;

    let vehicle = Vehicle {
        id: 0,
        place: Place::point(Position::in_unit_square(0.3, 0.3)?),
        request: EnergyRequest::new(6.0, 8.0)?,
        weights: PreferenceWeights::equal(),
        spawn_time: 0,
        compliant_draw: None,
    };

    let bids = collect_bids(&vehicle.broadcast(), &stations, &arena, &params, 0)?;
    println!("station  time   price  dist   total  p(green)");
    for b in &bids {
        let c = &b.cost;
        println!(
            "{:>7}  {:.3}  {:.3}  {:.3}  {:.3}  {:.3}",
            b.station_id,
            c.t_component,
            c.p_component,
            c.d_component,
            c.aggregate,
            green_signal_probability(c)
        );
    }
    println!("cheapest: station {}", argmin_bid(&bids).unwrap().station_id);
    Ok(())
}
