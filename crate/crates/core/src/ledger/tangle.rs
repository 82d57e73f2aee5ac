//! Append-only transaction DAG in which every new transaction approves two
//! earlier ones. Proof of work is modelled as a fixed confirmation delay.

use std::collections::{BTreeSet, VecDeque};

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{LedgerError, Transaction, TxId};
use crate::domain::SimTime;

#[derive(Debug, Clone)]
pub struct Tangle {
    txs: Vec<Transaction>,
    confirmed: Vec<bool>,
    // number of confirmed transactions approving each transaction
    approvers: Vec<u32>,
    tips: BTreeSet<TxId>,
    pending: VecDeque<(SimTime, TxId)>,
    pow_delay: SimTime,
}

impl Tangle {
    pub fn new(pow_delay: SimTime) -> Self {
        Self {
            txs: Vec::new(),
            confirmed: Vec::new(),
            approvers: Vec::new(),
            tips: BTreeSet::new(),
            pending: VecDeque::new(),
            pow_delay,
        }
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.txs
    }

    pub fn tips(&self) -> &BTreeSet<TxId> {
        &self.tips
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_confirmed(&self, id: TxId) -> bool {
        self.confirmed.get(id as usize).copied().unwrap_or(false)
    }

    pub fn next_id(&self) -> TxId {
        self.txs.len() as TxId
    }

    /// Picks two parents uniformly among the tips, falling back to any
    /// confirmed transactions when fewer than two tips exist.
    pub fn select_parents<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<[TxId; 2], LedgerError> {
        let tips: Vec<TxId> = self.tips.iter().copied().collect();
        if tips.len() >= 2 {
            let picked: Vec<TxId> = tips.choose_multiple(rng, 2).copied().collect();
            return Ok([picked[0], picked[1]]);
        }
        let confirmed: Vec<TxId> = (0..self.txs.len() as TxId).filter(|&id| self.is_confirmed(id)).collect();
        match (tips.first(), confirmed.len()) {
            (_, 0) => Err(LedgerError::InvalidParents("no confirmed transaction to approve".into())),
            (_, 1) => Ok([confirmed[0], confirmed[0]]),
            (Some(&tip), _) => {
                let others: Vec<TxId> = confirmed.into_iter().filter(|&c| c != tip).collect();
                Ok([tip, *others.choose(rng).expect("at least one other confirmed transaction")])
            }
            (None, _) => {
                let picked: Vec<TxId> = confirmed.choose_multiple(rng, 2).copied().collect();
                Ok([picked[0], picked[1]])
            }
        }
    }

    /// Appends `tx` with random tip selection. The first transaction is the
    /// genesis: it approves nothing and is confirmed immediately.
    pub fn issue<R: Rng + ?Sized>(&mut self, mut tx: Transaction, now: SimTime, rng: &mut R) -> Result<TxId, LedgerError> {
        tx.id = self.next_id();
        if self.txs.is_empty() {
            tx.approves.clear();
            return self.append(tx, now);
        }
        tx.approves = self.select_parents(rng)?.to_vec();
        self.append(tx, now)
    }

    /// Appends a transaction whose id and parents are already filled in.
    pub fn append(&mut self, tx: Transaction, now: SimTime) -> Result<TxId, LedgerError> {
        let id = tx.id;
        if id != self.next_id() {
            return Err(LedgerError::InvalidParents(format!("transaction id {id} out of sequence")));
        }
        if self.txs.is_empty() {
            if !tx.approves.is_empty() {
                return Err(LedgerError::InvalidParents("genesis approves nothing".into()));
            }
        } else {
            if tx.approves.len() != 2 {
                return Err(LedgerError::InvalidParents(format!("transaction {id} must approve exactly two")));
            }
            for &p in &tx.approves {
                if p >= id {
                    return Err(LedgerError::CycleDetected(id));
                }
                if !self.is_confirmed(p) {
                    return Err(LedgerError::InvalidParents(format!("parent {p} of {id} is not confirmed")));
                }
            }
        }
        self.txs.push(tx);
        self.confirmed.push(false);
        self.approvers.push(0);
        if id == 0 || self.pow_delay == 0 {
            self.confirm(id);
        } else {
            self.pending.push_back((now + self.pow_delay, id));
        }
        Ok(id)
    }

    fn confirm(&mut self, id: TxId) {
        let parents = self.txs[id as usize].approves.clone();
        let mut seen = Vec::with_capacity(2);
        for p in parents {
            if seen.contains(&p) {
                continue;
            }
            seen.push(p);
            self.approvers[p as usize] += 1;
            self.tips.remove(&p);
        }
        self.confirmed[id as usize] = true;
        self.tips.insert(id);
    }

    /// Confirms every pending transaction whose proof of work is done by `now`.
    pub fn tick(&mut self, now: SimTime) -> Vec<TxId> {
        let mut done = Vec::new();
        while let Some(&(at, id)) = self.pending.front() {
            if at > now {
                break;
            }
            self.pending.pop_front();
            self.confirm(id);
            done.push(id);
        }
        done
    }

    /// Confirms everything still pending, regardless of time.
    pub fn flush(&mut self) {
        while let Some((_, id)) = self.pending.pop_front() {
            self.confirm(id);
        }
    }

    /// Checks acyclicity (a topological order exists) and the tip-set
    /// invariant. Returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        // Kahn's algorithm over parent -> child edges
        let n = self.txs.len();
        let mut indegree = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for tx in &self.txs {
            let mut parents = tx.approves.clone();
            parents.dedup();
            for p in parents {
                if p as usize >= n {
                    return Err(format!("transaction {} approves unknown {p}", tx.id));
                }
                children[p as usize].push(tx.id as usize);
                indegree[tx.id as usize] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(u) = queue.pop_front() {
            visited += 1;
            for &c in &children[u] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if visited != n {
            return Err("transaction graph contains a cycle".into());
        }

        let mut approved = vec![false; n];
        for tx in self.txs.iter().filter(|t| self.is_confirmed(t.id)) {
            for &p in &tx.approves {
                approved[p as usize] = true;
            }
        }
        let expected: BTreeSet<TxId> =
            (0..n as TxId).filter(|&id| self.is_confirmed(id) && !approved[id as usize]).collect();
        if expected != self.tips {
            return Err(format!("tip set {:?} differs from unapproved set {:?}", self.tips, expected));
        }
        Ok(())
    }
}
