//! In-process model of a permissioned DAG ledger used for token bonds.
//!
//! Vehicles escrow a bond with the station they accept. An observer at the
//! station attests the vehicle's arrival; the escrow returns the bond on a
//! valid attestation made before the deadline and forfeits it to the station
//! otherwise. Settlement is executed by the escrow logic, not by either party.

mod replay;
mod tangle;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use replay::{read_dump, verify_dump, write_dump, DumpHeader, VerificationReport};
pub use tangle::Tangle;

use crate::domain::{SimTime, StationId, Tokens, VehicleId};
use crate::rng::SimRng;

pub type TxId = u64;
pub type EscrowId = u64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("account {account} holds {balance} tokens, {needed} needed")]
    InsufficientBalance { account: AccountId, balance: Tokens, needed: Tokens },
    #[error("invalid parents: {0}")]
    InvalidParents(String),
    #[error("transaction {0} would close a cycle")]
    CycleDetected(TxId),
    #[error("vehicle {vehicle} is not at station {station}")]
    NotAtStation { vehicle: AccountId, station: StationId },
    #[error("escrow {0} is already settled")]
    AlreadySettled(EscrowId),
    #[error("escrow {0} cannot be settled yet: no valid attestation and deadline not passed")]
    NotYetDue(EscrowId),
    #[error("unknown escrow {0}")]
    UnknownEscrow(EscrowId),
    #[error("escrow {0} was already funded")]
    DoubleSpend(EscrowId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccountId {
    Treasury,
    Vehicle(VehicleId),
    Station(StationId),
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccountId::Treasury => f.write_str("treasury"),
            AccountId::Vehicle(v) => write!(f, "v{v}"),
            AccountId::Station(s) => write!(f, "s{s}"),
        }
    }
}

impl FromStr for AccountId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("bad account id `{s}`");
        match s {
            "treasury" => Ok(AccountId::Treasury),
            _ if s.starts_with('v') => s[1..].parse().map(AccountId::Vehicle).map_err(|_| bad()),
            _ if s.starts_with('s') => s[1..].parse().map(AccountId::Station).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl Serialize for AccountId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AccountId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    DepositBond,
    ReturnBond,
    ForfeitBond,
    Transfer,
}

/// Proof that a vehicle was physically at a station at a given time.
///
/// Only [`attest_position`] creates these inside the simulator; the fields
/// are private so callers cannot fabricate one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopAttestation {
    observer: StationId,
    vehicle: AccountId,
    station: StationId,
    timestamp: SimTime,
}

impl PopAttestation {
    pub fn observer(&self) -> StationId {
        self.observer
    }

    pub fn vehicle(&self) -> AccountId {
        self.vehicle
    }

    pub fn station(&self) -> StationId {
        self.station
    }

    pub fn timestamp(&self) -> SimTime {
        self.timestamp
    }
}

/// Ground truth about where vehicles are. The engine implements this.
pub trait PresenceOracle {
    fn is_present(&self, vehicle: AccountId, station: StationId, time: SimTime) -> bool;
}

/// Observer `observer` (co-located with station `observer`) attests that
/// `vehicle` is at `station` at `time`.
pub fn attest_position(
    observer: StationId,
    vehicle: AccountId,
    station: StationId,
    time: SimTime,
    ground_truth: &impl PresenceOracle,
) -> Result<PopAttestation, LedgerError> {
    if observer != station || !ground_truth.is_present(vehicle, station, time) {
        return Err(LedgerError::NotAtStation { vehicle, station });
    }
    Ok(PopAttestation { observer, vehicle, station, timestamp: time })
}

/// One ledger record. Field order here is the field order of the dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxId,
    pub timestamp: SimTime,
    pub issuer: AccountId,
    pub kind: TxKind,
    pub amount: Tokens,
    pub to: Option<AccountId>,
    pub escrow: Option<EscrowId>,
    pub station: Option<StationId>,
    pub deadline: Option<SimTime>,
    pub approves: Vec<TxId>,
    pub pop: Option<PopAttestation>,
}

impl Transaction {
    pub fn new(issuer: AccountId, kind: TxKind, amount: Tokens, timestamp: SimTime) -> Self {
        Self {
            id: 0,
            timestamp,
            issuer,
            kind,
            amount,
            to: None,
            escrow: None,
            station: None,
            deadline: None,
            approves: Vec::new(),
            pop: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscrowStatus {
    Open,
    Returned,
    Forfeited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscrowContract {
    pub id: EscrowId,
    pub vehicle: AccountId,
    pub station: StationId,
    pub station_account: AccountId,
    pub bond: Tokens,
    pub deadline: SimTime,
    pub status: EscrowStatus,
}

impl EscrowContract {
    /// Whether `pop` entitles the vehicle to its bond back.
    pub fn accepts(&self, pop: &PopAttestation) -> bool {
        pop.station == self.station && pop.vehicle == self.vehicle && pop.timestamp <= self.deadline
    }
}

/// Token balances plus escrowed amounts. The total supply never changes.
#[derive(Debug, Clone, Default)]
pub struct AccountBook {
    balances: BTreeMap<AccountId, Tokens>,
    escrowed: BTreeMap<EscrowId, Tokens>,
    supply: Tokens,
}

impl AccountBook {
    pub fn with_treasury(supply: Tokens) -> Self {
        let mut balances = BTreeMap::new();
        balances.insert(AccountId::Treasury, supply);
        Self { balances, escrowed: BTreeMap::new(), supply }
    }

    pub fn balance(&self, account: AccountId) -> Tokens {
        self.balances.get(&account).copied().unwrap_or(Tokens::ZERO)
    }

    pub fn escrowed(&self, escrow: EscrowId) -> Tokens {
        self.escrowed.get(&escrow).copied().unwrap_or(Tokens::ZERO)
    }

    pub fn supply(&self) -> Tokens {
        self.supply
    }

    /// Sum of all balances and open escrows; equals [`AccountBook::supply`].
    pub fn total(&self) -> Tokens {
        self.balances.values().copied().sum::<Tokens>() + self.escrowed.values().copied().sum::<Tokens>()
    }

    fn debit(&mut self, account: AccountId, amount: Tokens) -> Result<(), LedgerError> {
        let balance = self.balance(account);
        let rest = balance
            .checked_sub(amount)
            .ok_or(LedgerError::InsufficientBalance { account, balance, needed: amount })?;
        self.balances.insert(account, rest);
        Ok(())
    }

    fn credit(&mut self, account: AccountId, amount: Tokens) {
        let entry = self.balances.entry(account).or_default();
        *entry = entry.saturating_add(amount);
    }

    pub fn transfer(&mut self, from: AccountId, to: AccountId, amount: Tokens) -> Result<(), LedgerError> {
        self.debit(from, amount)?;
        self.credit(to, amount);
        Ok(())
    }

    pub fn lock(&mut self, escrow: EscrowId, from: AccountId, amount: Tokens) -> Result<(), LedgerError> {
        if self.escrowed.contains_key(&escrow) {
            return Err(LedgerError::DoubleSpend(escrow));
        }
        self.debit(from, amount)?;
        self.escrowed.insert(escrow, amount);
        Ok(())
    }

    pub fn release(&mut self, escrow: EscrowId, to: AccountId) -> Result<Tokens, LedgerError> {
        let amount = self.escrowed.remove(&escrow).ok_or(LedgerError::UnknownEscrow(escrow))?;
        self.credit(to, amount);
        Ok(amount)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settlement {
    pub escrow: EscrowId,
    pub returned: bool,
    pub time: SimTime,
}

/// Ledger state: tangle, balances, escrow contracts and the settlement log.
#[derive(Debug, Clone)]
pub struct Ledger {
    book: AccountBook,
    tangle: Tangle,
    escrows: Vec<EscrowContract>,
    settlements: Vec<Settlement>,
    funded: HashSet<EscrowId>,
    rng: SimRng,
}

impl Ledger {
    /// New ledger with `supply` tokens in the treasury and a genesis
    /// transaction issued at time zero.
    pub fn new(supply: Tokens, pow_delay: SimTime, rng: SimRng) -> Self {
        let mut ledger = Self {
            book: AccountBook::with_treasury(supply),
            tangle: Tangle::new(pow_delay),
            escrows: Vec::new(),
            settlements: Vec::new(),
            funded: HashSet::new(),
            rng,
        };
        let mut genesis = Transaction::new(AccountId::Treasury, TxKind::Transfer, Tokens::ZERO, 0);
        genesis.to = Some(AccountId::Treasury);
        ledger.tangle.issue(genesis, 0, &mut ledger.rng).expect("genesis always appends");
        ledger
    }

    pub fn book(&self) -> &AccountBook {
        &self.book
    }

    pub fn tangle(&self) -> &Tangle {
        &self.tangle
    }

    pub fn escrow(&self, id: EscrowId) -> Option<&EscrowContract> {
        self.escrows.get(id as usize)
    }

    pub fn escrows(&self) -> &[EscrowContract] {
        &self.escrows
    }

    pub fn settlements(&self) -> &[Settlement] {
        &self.settlements
    }

    pub fn tick(&mut self, now: SimTime) {
        self.tangle.tick(now);
    }

    fn issue(&mut self, tx: Transaction, now: SimTime) -> TxId {
        // parents always exist once genesis is confirmed
        self.tangle.issue(tx, now, &mut self.rng).expect("tip selection yields valid parents")
    }

    pub fn transfer(&mut self, from: AccountId, to: AccountId, amount: Tokens, now: SimTime) -> Result<TxId, LedgerError> {
        self.book.transfer(from, to, amount)?;
        let mut tx = Transaction::new(from, TxKind::Transfer, amount, now);
        tx.to = Some(to);
        Ok(self.issue(tx, now))
    }

    /// Moves `bond` from the vehicle into a new escrow towards `station`.
    pub fn open_escrow(
        &mut self,
        vehicle: AccountId,
        station: StationId,
        bond: Tokens,
        deadline: SimTime,
        now: SimTime,
    ) -> Result<EscrowContract, LedgerError> {
        let id = self.escrows.len() as EscrowId;
        if !self.funded.insert(id) {
            return Err(LedgerError::DoubleSpend(id));
        }
        if let Err(e) = self.book.lock(id, vehicle, bond) {
            self.funded.remove(&id);
            return Err(e);
        }
        let contract = EscrowContract {
            id,
            vehicle,
            station,
            station_account: AccountId::Station(station),
            bond,
            deadline,
            status: EscrowStatus::Open,
        };
        self.escrows.push(contract.clone());
        let mut tx = Transaction::new(vehicle, TxKind::DepositBond, bond, now);
        tx.to = Some(contract.station_account);
        tx.escrow = Some(id);
        tx.station = Some(station);
        tx.deadline = Some(deadline);
        self.issue(tx, now);
        Ok(contract)
    }

    /// Settles an open escrow: a valid attestation returns the bond; without
    /// one, the bond is forfeited once `now` is past the deadline.
    pub fn settle_escrow(
        &mut self,
        escrow: EscrowId,
        attestation: Option<&PopAttestation>,
        now: SimTime,
    ) -> Result<EscrowStatus, LedgerError> {
        let contract = self.escrows.get(escrow as usize).ok_or(LedgerError::UnknownEscrow(escrow))?.clone();
        if contract.status != EscrowStatus::Open {
            return Err(LedgerError::AlreadySettled(escrow));
        }
        let valid = attestation.filter(|pop| contract.accepts(pop));
        let (status, kind, beneficiary) = match valid {
            Some(_) => (EscrowStatus::Returned, TxKind::ReturnBond, contract.vehicle),
            None if now > contract.deadline => (EscrowStatus::Forfeited, TxKind::ForfeitBond, contract.station_account),
            None => return Err(LedgerError::NotYetDue(escrow)),
        };
        let amount = self.book.release(escrow, beneficiary)?;
        self.escrows[escrow as usize].status = status;
        let mut tx = Transaction::new(contract.station_account, kind, amount, now);
        tx.to = Some(beneficiary);
        tx.escrow = Some(escrow);
        tx.station = Some(contract.station);
        tx.pop = valid.copied();
        self.issue(tx, now);
        self.settlements.push(Settlement { escrow, returned: status == EscrowStatus::Returned, time: now });
        Ok(status)
    }

    /// Checks token conservation, DAG acyclicity and the tip-set invariant.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.book.total() != self.book.supply() {
            return Err(format!("token total {} differs from supply {}", self.book.total(), self.book.supply()));
        }
        self.tangle.check_invariants()
    }
}
