//! Runs the green-signal protocol many times over fixed bids and compares
//! winner frequencies with the centralized choice.

use evcharge::assignment::{argmin_bid, run_green_signal_protocol, StationBid};
use evcharge::cost::CostBreakdown;
use evcharge::mobility::TravelEstimate;
use evcharge::rng::stream_rng;

fn bid(station_id: u32, aggregate: f64, distance: f64) -> StationBid {
    StationBid {
        station_id,
        cost: CostBreakdown { t_component: aggregate, p_component: 0.0, d_component: 0.0, aggregate, renewable_forecast_kwh: 0.0 },
        travel: TravelEstimate { distance, travel_time_s: distance / 0.02 },
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bids = [bid(0, 0.15, 0.5), bid(1, 0.30, 0.2), bid(2, 0.60, 0.1)];
    let mut rng = stream_rng(7, 4);
    let trials = 20_000;
    let mut wins = [0usize; 3];
    let mut waits = 0u64;
    for _ in 0..trials {
        let (i, wait) = run_green_signal_protocol(&bids, &mut rng, 10_000)?;
        wins[i] += 1;
        waits += wait as u64;
    }
    for (b, w) in bids.iter().zip(wins) {
        println!("station {} cost {:.2}: won {:.1}%", b.station_id, b.cost.aggregate, 100.0 * w as f64 / trials as f64);
    }
    println!("mean wait {:.3} steps", waits as f64 / trials as f64);
    println!("centralized pick: station {}", argmin_bid(&bids).unwrap().station_id);
    Ok(())
}
