use std::collections::BTreeMap;

use evcharge::domain::{SimTime, StationId, Tokens};
use evcharge::ledger::{
    attest_position, verify_dump, AccountId, DumpHeader, EscrowStatus, Ledger, LedgerError, PresenceOracle, TxKind,
};
use evcharge::rng::stream_rng;
use proptest::prelude::*;
use rand::Rng;

const SEQUENCES: u64 = 100_000;
const SUPPLY: f64 = 10_000.0;
const POW_DELAY: SimTime = 2;

struct Presence(bool);

impl PresenceOracle for Presence {
    fn is_present(&self, _: AccountId, _: StationId, _: SimTime) -> bool {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Tick(u64),
    Transfer { from: u8, to: u8, amount: f64 },
    Open { vehicle: u8, station: u8, bond: f64, window: u64 },
    Settle { escrow: u8, present: bool, wrong_station: bool },
}

fn account(code: u8) -> AccountId {
    match code % 7 {
        0 => AccountId::Treasury,
        1..=4 => AccountId::Vehicle((code % 7) as u64),
        c => AccountId::Station(c as u32),
    }
}

fn random_op<R: Rng>(rng: &mut R) -> Op {
    match rng.random_range(0..4) {
        0 => Op::Tick(rng.random_range(0..5)),
        1 => Op::Transfer { from: rng.random(), to: rng.random(), amount: rng.random_range(0.0..400.0) },
        2 => Op::Open {
            vehicle: rng.random_range(1..5),
            station: rng.random_range(0..3),
            bond: rng.random_range(0.0..60.0),
            window: rng.random_range(0..6),
        },
        _ => Op::Settle { escrow: rng.random_range(0..8), present: rng.random_bool(0.6), wrong_station: rng.random_bool(0.1) },
    }
}

/// Applies `ops`, tracking what every settlement was entitled to, then checks
/// conservation, acyclicity, settlement soundness and a clean replay.
fn run_sequence(seed: u64, ops: &[Op]) -> Result<(), String> {
    let mut ledger = Ledger::new(Tokens::from_tokens(SUPPLY), POW_DELAY, stream_rng(seed, 6));
    let mut now: SimTime = 0;
    // escrow id -> (deadline, bond)
    let mut opened: BTreeMap<u64, (SimTime, Tokens)> = BTreeMap::new();

    for op in ops {
        ledger.tick(now);
        match *op {
            Op::Tick(dt) => now += dt,
            Op::Transfer { from, to, amount } => {
                let (from, to) = (account(from), account(to));
                let before = ledger.book().balance(from);
                let amount = Tokens::from_tokens(amount);
                match ledger.transfer(from, to, amount, now) {
                    Ok(_) if before < amount => return Err("overdraft accepted".into()),
                    Err(LedgerError::InsufficientBalance { .. }) if before >= amount => {
                        return Err("funded transfer rejected".into())
                    }
                    _ => {}
                }
            }
            Op::Open { vehicle, station, bond, window } => {
                let vehicle = AccountId::Vehicle(vehicle as u64);
                let bond = Tokens::from_tokens(bond);
                let before = ledger.book().balance(vehicle);
                match ledger.open_escrow(vehicle, station as StationId, bond, now + window, now) {
                    Ok(c) => {
                        if before < bond {
                            return Err("unfunded escrow opened".into());
                        }
                        if ledger.book().escrowed(c.id) != bond {
                            return Err(format!("escrow {} holds the wrong amount", c.id));
                        }
                        opened.insert(c.id, (c.deadline, bond));
                    }
                    Err(LedgerError::InsufficientBalance { .. }) if before < bond => {}
                    Err(e) => return Err(format!("open failed: {e}")),
                }
            }
            Op::Settle { escrow, present, wrong_station } => {
                let id = escrow as u64;
                let Some(contract) = ledger.escrow(id).cloned() else {
                    if ledger.settle_escrow(id, None, now).is_ok() {
                        return Err("unknown escrow settled".into());
                    }
                    continue;
                };
                let station = if wrong_station { contract.station + 1 } else { contract.station };
                let pop = attest_position(station, contract.vehicle, station, now, &Presence(present)).ok();
                let valid = pop.as_ref().is_some_and(|p| contract.accepts(p));
                let was_open = contract.status == EscrowStatus::Open;
                let vehicle_before = ledger.book().balance(contract.vehicle);
                let station_before = ledger.book().balance(contract.station_account);
                match ledger.settle_escrow(id, pop.as_ref(), now) {
                    Ok(status) => {
                        if !was_open {
                            return Err(format!("escrow {id} settled twice"));
                        }
                        let (deadline, bond) = opened[&id];
                        match status {
                            EscrowStatus::Returned => {
                                if !valid || now > deadline {
                                    return Err(format!("escrow {id} returned without a valid attestation"));
                                }
                                if ledger.book().balance(contract.vehicle) != vehicle_before + bond {
                                    return Err(format!("escrow {id} returned the wrong amount"));
                                }
                            }
                            EscrowStatus::Forfeited => {
                                if valid || now <= deadline {
                                    return Err(format!("escrow {id} forfeited early"));
                                }
                                if ledger.book().balance(contract.station_account) != station_before + bond {
                                    return Err(format!("escrow {id} forfeited the wrong amount"));
                                }
                            }
                            EscrowStatus::Open => return Err("settlement left escrow open".into()),
                        }
                        if ledger.book().escrowed(id) != Tokens::ZERO {
                            return Err(format!("escrow {id} still holds tokens"));
                        }
                    }
                    Err(LedgerError::AlreadySettled(_)) if !was_open => {}
                    Err(LedgerError::NotYetDue(_)) if was_open && !valid && now <= contract.deadline => {}
                    Err(e) => return Err(format!("unexpected settlement error on escrow {id}: {e}")),
                }
            }
        }
        ledger.check_invariants()?;
    }

    let settled: usize = ledger.escrows().iter().filter(|e| e.status != EscrowStatus::Open).count();
    if settled != ledger.settlements().len() {
        return Err("settlement log out of sync".into());
    }
    let header = DumpHeader {
        tool: "evcharge".into(),
        version: "test".into(),
        run: 0,
        treasury_supply: Tokens::from_tokens(SUPPLY),
        pow_delay: POW_DELAY,
        config: String::new(),
    };
    let report = verify_dump(&header, ledger.tangle().transactions());
    if !report.is_ok() {
        return Err(format!("replay violations: {:?}", report.violations));
    }
    let deposits = ledger.tangle().transactions().iter().filter(|t| t.kind == TxKind::DepositBond).count();
    if deposits != opened.len() {
        return Err("deposit count differs from opened escrows".into());
    }
    Ok(())
}

fn seeded_ops(seed: u64) -> Vec<Op> {
    let mut rng = stream_rng(seed, 9);
    let mut ops = vec![
        Op::Transfer { from: 0, to: 1, amount: 100.0 },
        Op::Transfer { from: 0, to: 2, amount: 50.0 },
    ];
    let len = rng.random_range(1..24);
    ops.extend((0..len).map(|_| random_op(&mut rng)));
    ops
}

/// Token conservation, acyclicity and settlement soundness over
/// `SEQUENCES` seeded operation sequences.
pub fn suite() {
    for seed in 0..SEQUENCES {
        let ops = seeded_ops(seed);
        if let Err(e) = run_sequence(seed, &ops) {
            panic!("sequence {seed} failed: {e}\nops: {ops:?}");
        }
    }
}

#[test]
fn randomized_operation_sequences_keep_ledger_sound() {
    suite();
}

fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u64..5).prop_map(Op::Tick),
        (any::<u8>(), any::<u8>(), 0.0f64..400.0).prop_map(|(from, to, amount)| Op::Transfer { from, to, amount }),
        (1u8..5, 0u8..3, 0.0f64..60.0, 0u64..6)
            .prop_map(|(vehicle, station, bond, window)| Op::Open { vehicle, station, bond, window }),
        (0u8..8, any::<bool>(), any::<bool>())
            .prop_map(|(escrow, present, wrong_station)| Op::Settle { escrow, present, wrong_station }),
    ]
}

proptest! {
    #[test]
    fn shrinkable_operation_sequences(seed in any::<u64>(), ops in proptest::collection::vec(op_strategy(), 0..40)) {
        let mut all = vec![Op::Transfer { from: 0, to: 1, amount: 100.0 }];
        all.extend(ops);
        prop_assert_eq!(run_sequence(seed, &all), Ok(()));
    }
}
