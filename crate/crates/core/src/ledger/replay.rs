//! Line-delimited JSON ledger dumps and their offline verification.
//!
//! The first line is `{"header": {...}}`; every following line is one
//! [`Transaction`] with fields in declaration order:
//! `id, timestamp, issuer, kind, amount, to, escrow, station, deadline,
//! approves, pop`.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{AccountBook, AccountId, EscrowContract, EscrowStatus, Tangle, Transaction, TxKind};
use crate::domain::Tokens;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub tool: String,
    pub version: String,
    pub run: u64,
    pub treasury_supply: Tokens,
    pub pow_delay: u64,
    /// Echo of the resolved scenario configuration.
    pub config: String,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: DumpHeader,
}

pub fn write_dump<W: Write>(out: &mut W, header: &DumpHeader, txs: &[Transaction]) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, &HeaderLine { header: header.clone() })?;
    writeln!(out)?;
    for tx in txs {
        serde_json::to_writer(&mut *out, tx)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_dump<R: BufRead>(input: R) -> Result<(DumpHeader, Vec<Transaction>), String> {
    let mut lines = input.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(line))) => serde_json::from_str::<HeaderLine>(&line).map_err(|e| format!("line 1: {e}"))?.header,
        Some((_, Err(e))) => return Err(e.to_string()),
        None => return Err("empty ledger dump".into()),
    };
    let mut txs = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        txs.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok((header, txs))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub transactions: usize,
    pub returned: usize,
    pub forfeited: usize,
    pub open: usize,
    pub violations: Vec<String>,
}

impl VerificationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Replays a dump from the header's treasury supply, checking acyclicity,
/// conservation after every record, no double funding, and that each
/// settlement matches its escrow's rules.
pub fn verify_dump(header: &DumpHeader, txs: &[Transaction]) -> VerificationReport {
    let mut report = VerificationReport { transactions: txs.len(), ..Default::default() };
    let mut book = AccountBook::with_treasury(header.treasury_supply);
    // no delay: a dump only contains transactions whose parents were confirmed
    let mut tangle = Tangle::new(0);
    let mut escrows: BTreeMap<u64, EscrowContract> = BTreeMap::new();
    let mut seen_ids = HashSet::new();

    for tx in txs {
        let mut fail = |msg: String| report.violations.push(format!("tx {}: {msg}", tx.id));
        if !seen_ids.insert(tx.id) {
            fail("duplicate transaction id".into());
            continue;
        }
        if let Err(e) = tangle.append(tx.clone(), tx.timestamp) {
            fail(e.to_string());
            continue;
        }
        let applied = match tx.kind {
            TxKind::Transfer => match tx.to {
                Some(to) => book.transfer(tx.issuer, to, tx.amount).map_err(|e| e.to_string()),
                None => Err("transfer without recipient".into()),
            },
            TxKind::DepositBond => match (tx.escrow, tx.station, tx.deadline) {
                (Some(id), Some(station), Some(deadline)) => {
                    if escrows.contains_key(&id) {
                        Err(format!("escrow {id} funded twice"))
                    } else {
                        book.lock(id, tx.issuer, tx.amount).map_err(|e| e.to_string()).map(|_| {
                            escrows.insert(
                                id,
                                EscrowContract {
                                    id,
                                    vehicle: tx.issuer,
                                    station,
                                    station_account: AccountId::Station(station),
                                    bond: tx.amount,
                                    deadline,
                                    status: EscrowStatus::Open,
                                },
                            );
                        })
                    }
                }
                _ => Err("deposit missing escrow, station or deadline".into()),
            },
            TxKind::ReturnBond | TxKind::ForfeitBond => settle(&mut book, &mut escrows, tx),
        };
        if let Err(msg) = applied {
            fail(msg);
        }
        if book.total() != book.supply() {
            fail(format!("token total {} differs from supply {}", book.total(), book.supply()));
        }
    }
    if let Err(msg) = tangle.check_invariants() {
        report.violations.push(msg);
    }
    for e in escrows.values() {
        match e.status {
            EscrowStatus::Open => report.open += 1,
            EscrowStatus::Returned => report.returned += 1,
            EscrowStatus::Forfeited => report.forfeited += 1,
        }
    }
    report
}

fn settle(book: &mut AccountBook, escrows: &mut BTreeMap<u64, EscrowContract>, tx: &Transaction) -> Result<(), String> {
    let id = tx.escrow.ok_or("settlement without escrow")?;
    let contract = escrows.get_mut(&id).ok_or(format!("escrow {id} was never funded"))?;
    if contract.status != EscrowStatus::Open {
        return Err(format!("escrow {id} settled twice"));
    }
    if tx.amount != contract.bond {
        return Err(format!("escrow {id} settles {} but holds {}", tx.amount, contract.bond));
    }
    let (status, beneficiary) = if tx.kind == TxKind::ReturnBond {
        match &tx.pop {
            Some(pop) if contract.accepts(pop) => (EscrowStatus::Returned, contract.vehicle),
            Some(_) => return Err(format!("escrow {id} returned on an attestation that does not satisfy it")),
            None => return Err(format!("escrow {id} returned without attestation")),
        }
    } else {
        if tx.timestamp <= contract.deadline {
            return Err(format!("escrow {id} forfeited before its deadline"));
        }
        if tx.pop.as_ref().is_some_and(|pop| contract.accepts(pop)) {
            return Err(format!("escrow {id} forfeited despite a valid attestation"));
        }
        (EscrowStatus::Forfeited, contract.station_account)
    };
    if tx.to != Some(beneficiary) {
        return Err(format!("escrow {id} paid to {:?} instead of {beneficiary}", tx.to));
    }
    book.release(id, beneficiary).map_err(|e| e.to_string())?;
    contract.status = status;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{attest_position, Ledger, PresenceOracle};
    use crate::rng::stream_rng;

    struct Here;

    impl PresenceOracle for Here {
        fn is_present(&self, _: AccountId, _: u32, _: u64) -> bool {
            true
        }
    }

    fn sample_ledger() -> (DumpHeader, Ledger) {
        let supply = Tokens::from_tokens(100.0);
        let mut l = Ledger::new(supply, 2, stream_rng(4, 6));
        let v = AccountId::Vehicle(0);
        l.transfer(AccountId::Treasury, v, Tokens::from_tokens(10.0), 0).unwrap();
        let a = l.open_escrow(v, 1, Tokens::from_tokens(2.0), 20, 3).unwrap();
        l.tick(5);
        let b = l.open_escrow(v, 2, Tokens::from_tokens(2.0), 20, 6).unwrap();
        l.tick(10);
        let pop = attest_position(1, v, 1, 15, &Here).unwrap();
        l.settle_escrow(a.id, Some(&pop), 15).unwrap();
        l.tick(30);
        l.settle_escrow(b.id, None, 30).unwrap();
        let header = DumpHeader {
            tool: "evcharge".into(),
            version: "test".into(),
            run: 0,
            treasury_supply: supply,
            pow_delay: 2,
            config: String::new(),
        };
        (header, l)
    }

    #[test]
    fn dump_round_trip_verifies() {
        let (header, l) = sample_ledger();
        let mut buf = Vec::new();
        write_dump(&mut buf, &header, l.tangle().transactions()).unwrap();
        let (h, txs) = read_dump(buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(txs, l.tangle().transactions());
        let report = verify_dump(&h, &txs);
        assert!(report.is_ok(), "{:?}", report.violations);
        assert_eq!((report.returned, report.forfeited, report.open), (1, 1, 0));
    }

    #[test]
    fn replayed_deposit_is_rejected() {
        let (header, l) = sample_ledger();
        let mut txs = l.tangle().transactions().to_vec();
        let deposit = txs.iter().find(|t| t.kind == TxKind::DepositBond).unwrap().clone();
        let mut replayed = deposit;
        replayed.id = txs.len() as u64;
        replayed.approves = vec![0, 1];
        txs.push(replayed);
        let report = verify_dump(&header, &txs);
        assert!(report.violations.iter().any(|v| v.contains("funded twice")), "{:?}", report.violations);
    }

    #[test]
    fn tampering_is_detected() {
        let (header, l) = sample_ledger();
        let txs = l.tangle().transactions().to_vec();

        let mut early = txs.clone();
        let f = early.iter_mut().find(|t| t.kind == TxKind::ForfeitBond).unwrap();
        f.timestamp = 10;
        assert!(!verify_dump(&header, &early).is_ok());

        let mut inflated = txs.clone();
        inflated[1].amount = Tokens::from_tokens(1000.0);
        assert!(!verify_dump(&header, &inflated).is_ok());

        let mut stripped = txs.clone();
        stripped.iter_mut().find(|t| t.kind == TxKind::ReturnBond).unwrap().pop = None;
        assert!(!verify_dump(&header, &stripped).is_ok());

        let mut cyclic = txs;
        let last = cyclic.len() - 1;
        cyclic[2].approves = vec![last as u64, 0];
        assert!(!verify_dump(&header, &cyclic).is_ok());
    }
}
