//! Bond escrow on the transaction DAG: one driver shows up and gets the bond
//! back, another defects and forfeits it. The dump is then replayed.

use evcharge::domain::{SimTime, StationId, Tokens};
use evcharge::ledger::{attest_position, verify_dump, AccountId, DumpHeader, Ledger, PresenceOracle};
use evcharge::rng::stream_rng;

/// Vehicle 1 is at station 3 from t = 40 on; nobody else is anywhere.
struct Sightings;

impl PresenceOracle for Sightings {
    fn is_present(&self, vehicle: AccountId, station: StationId, time: SimTime) -> bool {
        vehicle == AccountId::Vehicle(1) && station == 3 && time >= 40
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let supply = Tokens::from_tokens(1_000.0);
    let mut ledger = Ledger::new(supply, 2, stream_rng(1, 6));
    let (alice, bob) = (AccountId::Vehicle(1), AccountId::Vehicle(2));
    ledger.transfer(AccountId::Treasury, alice, Tokens::from_tokens(50.0), 0)?;
    ledger.transfer(AccountId::Treasury, bob, Tokens::from_tokens(50.0), 0)?;

    let bond = Tokens::from_tokens(5.0);
    let a = ledger.open_escrow(alice, 3, bond, 100, 1)?;
    let b = ledger.open_escrow(bob, 4, bond, 100, 1)?;

    for t in 2..=101 {
        ledger.tick(t);
    }
    let pop = attest_position(3, alice, 3, 40, &Sightings)?;
    println!("escrow {}: {:?}", a.id, ledger.settle_escrow(a.id, Some(&pop), 41)?);
    println!("escrow {} before the deadline: {:?}", b.id, ledger.settle_escrow(b.id, None, 60).unwrap_err());
    println!("escrow {}: {:?}", b.id, ledger.settle_escrow(b.id, None, 101)?);
    println!("forged attestation: {}", attest_position(4, bob, 4, 50, &Sightings).unwrap_err());

    for acct in [alice, bob, AccountId::Station(4)] {
        println!("{acct}: {:.2} tokens", ledger.book().balance(acct).as_tokens());
    }
    ledger.check_invariants()?;

    let header = DumpHeader {
        tool: "evcharge".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        run: 0,
        treasury_supply: supply,
        pow_delay: 2,
        config: String::new(),
    };
    let report = verify_dump(&header, ledger.tangle().transactions());
    println!("replay: {} transactions, {} returned, {} forfeited, ok = {}", report.transactions, report.returned, report.forfeited, report.is_ok());
    Ok(())
}
