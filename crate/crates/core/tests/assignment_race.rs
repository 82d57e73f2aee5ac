use evcharge::assignment::{argmin_bid, run_green_signal_protocol, StationBid};
use evcharge::cost::CostBreakdown;
use evcharge::mobility::TravelEstimate;
use evcharge::rng::stream_rng;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

const TRIALS: usize = 10_000;
const TOLERANCE: f64 = 0.02;

fn bid(station_id: u32, aggregate: f64, distance: f64) -> StationBid {
    StationBid {
        station_id,
        cost: CostBreakdown { t_component: aggregate, p_component: 0.0, d_component: 0.0, aggregate, renewable_forecast_kwh: 0.0 },
        travel: TravelEstimate { distance, travel_time_s: distance * 50.0 },
    }
}

/// Probability that each bid wins a step, by enumerating every subset of
/// stations that fire together: the nearest (then lowest id) member of the
/// subset wins. Normalized by the chance that anyone fires at all.
fn first_signal_oracle(bids: &[StationBid]) -> Vec<f64> {
    let p: Vec<f64> = bids.iter().map(|b| 10f64.powf(-b.cost.aggregate)).collect();
    let n = bids.len();
    let mut win = vec![0.0; n];
    for mask in 1u32..(1 << n) {
        let prob: f64 = (0..n).map(|i| if mask & (1 << i) != 0 { p[i] } else { 1.0 - p[i] }).product();
        let winner = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .min_by(|&a, &b| {
                bids[a].travel.distance.total_cmp(&bids[b].travel.distance).then(bids[a].station_id.cmp(&bids[b].station_id))
            })
            .unwrap();
        win[winner] += prob;
    }
    let any: f64 = win.iter().sum();
    win.iter().map(|w| w / any).collect()
}

fn empirical(bids: &[StationBid], seed: u64) -> (Vec<f64>, f64) {
    let mut rng = stream_rng(seed, 4);
    let mut counts = vec![0usize; bids.len()];
    let mut waits = 0u64;
    for _ in 0..TRIALS {
        let (winner, wait) = run_green_signal_protocol(bids, &mut rng, 100_000).unwrap();
        counts[winner] += 1;
        waits += wait as u64;
    }
    (counts.iter().map(|&c| c as f64 / TRIALS as f64).collect(), waits as f64 / TRIALS as f64)
}

fn check_race(bids: &[StationBid], seed: u64) {
    let expected = first_signal_oracle(bids);
    let (observed, mean_wait) = empirical(bids, seed);
    for (i, (o, e)) in observed.iter().zip(&expected).enumerate() {
        assert!((o - e).abs() <= TOLERANCE, "station {i}: observed {o:.4} vs analytic {e:.4} for {bids:?}");
    }
    // waiting steps are geometric in the chance that nobody fires
    let none: f64 = bids.iter().map(|b| 1.0 - 10f64.powf(-b.cost.aggregate)).product();
    let expected_wait = none / (1.0 - none);
    assert!((mean_wait - expected_wait).abs() <= 0.1 * expected_wait.max(0.2), "{mean_wait} vs {expected_wait}");
}

/// Winner frequencies of every fixed and random 2-3 station case against
/// subset enumeration.
pub fn suite() {
    two_station_cases();
    three_station_cases();
    random_cases();
}

fn two_station_cases() {
    check_race(&[bid(0, 0.3, 0.4), bid(1, 0.1, 0.7)], 1);
    check_race(&[bid(0, 0.8, 0.2), bid(1, 0.2, 0.5)], 2);
    // equal distance: the lower id wins joint signals
    check_race(&[bid(3, 0.5, 0.3), bid(1, 0.5, 0.3)], 3);
}

fn three_station_cases() {
    check_race(&[bid(0, 0.4, 0.6), bid(1, 0.2, 0.9), bid(2, 0.7, 0.1)], 4);
    check_race(&[bid(0, 1.0, 0.5), bid(1, 1.0, 0.5), bid(2, 1.0, 0.5)], 5);
    check_race(&[bid(7, 0.05, 1.2), bid(2, 0.6, 0.3), bid(5, 0.3, 0.8)], 6);
}

fn random_cases() {
    let mut rng = stream_rng(42, 0);
    for case in 0..10 {
        let n = rng.random_range(2..=3);
        let bids: Vec<StationBid> =
            (0..n).map(|i| bid(i, rng.random_range(0.0..1.2), rng.random_range(0.0..1.4))).collect();
        check_race(&bids, 100 + case);
    }
}

#[test]
fn two_station_race_matches_subset_enumeration() {
    two_station_cases();
}

#[test]
fn three_station_race_matches_subset_enumeration() {
    three_station_cases();
}

#[test]
fn random_race_cases_match_subset_enumeration() {
    random_cases();
}

proptest! {
    #[test]
    fn argmin_ignores_bid_order(
        costs in proptest::collection::vec((0u8..4, 0u8..4), 1..8),
        shuffle_seed in any::<u64>(),
    ) {
        // coarse values force ties on both cost and distance
        let bids: Vec<StationBid> =
            costs.iter().enumerate().map(|(i, &(c, d))| bid(i as u32, c as f64 / 4.0, d as f64 / 4.0)).collect();
        let mut shuffled = bids.clone();
        shuffled.shuffle(&mut stream_rng(shuffle_seed, 0));
        let a = argmin_bid(&bids).unwrap();
        let b = argmin_bid(&shuffled).unwrap();
        prop_assert_eq!(a.station_id, b.station_id);
        for other in &bids {
            let key = |x: &StationBid| (x.cost.aggregate, x.travel.distance, x.station_id);
            prop_assert!(key(a) <= key(other));
        }
    }
}
