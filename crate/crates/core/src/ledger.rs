//! The live ledger: in-memory chains kept in lockstep with the durable
//! store, plus the rotation and anchoring choreography.
//!
//! This is the single write path. Every front end (HTTP service, offline
//! command line, load harness) drives ingestion through [`Ledger`], so
//! they all produce byte-identical files for the same inputs and agree on
//! every verdict.

use serde::Serialize;

use crate::anchor::{AnchorBackend, AnchorError, AnchorReceipt, AnchorTicket, GasPrice, PollOutcome};
use crate::block::Block;
use crate::circled::{new_relative_genesis, ChainError, CircledBlockchain};
use crate::hash::Hash;
use crate::hierarchy::{find_digest, verify_hierarchy, MembershipProof};
use crate::report::HierarchyReport;
use crate::store::{
    LedgerState, LedgerStore, ReceiptEvent, ReceiptsState, RecoveryNote, StoreError,
};
use crate::superchain::SuperBlockchain;

#[derive(Debug, thiserror::Error)]
pub enum LedgerError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Anchor(#[from] AnchorError),
    /// The in-memory receipt fold rejected an event the backend produced —
    /// almost always a backend whose ticket numbering collides with the
    /// stored history.
    #[error("receipt bookkeeping rejected an event: {0}")]
    ReceiptConflict(String),
}

/// Where a submitted digest ended up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Submission {
    pub digest: Hash,
    pub chain_id: u64,
    pub block_index: u64,
    /// True when this digest filled the chain and triggered rotation.
    pub sealed: bool,
    /// Super block covering the sealed chain, when rotation happened.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sb_index: Option<u64>,
    /// Anchoring ticket for that super block, when a backend is attached.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ticket: Option<AnchorTicket>,
}

/// Result of sealing the open chain by hand.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SealOutcome {
    pub chain_id: u64,
    /// How many data blocks the terminal covers.
    pub data_blocks: u64,
    pub sb_index: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ticket: Option<AnchorTicket>,
    pub next_chain_id: u64,
}

/// An anchoring backend paired with the gas price to bid.
pub type AnchorWith<'a> = (&'a dyn AnchorBackend, GasPrice);

pub struct Ledger {
    store: LedgerStore,
    state: LedgerState,
}

impl Ledger {
    /// Creates a ledger at `root` with chain capacity `capacity_n`.
    pub fn init(root: &std::path::Path, capacity_n: u64, now_ms: i64) -> Result<Self, LedgerError> {
        let (store, state) = LedgerStore::init(root, capacity_n, now_ms)?;
        Ok(Ledger { store, state })
    }

    /// Opens (and if necessary repairs) the ledger at `root`.
    pub fn open(root: &std::path::Path) -> Result<(Self, Vec<RecoveryNote>), LedgerError> {
        let (store, state, notes) = LedgerStore::open(root)?;
        Ok((Ledger { store, state }, notes))
    }

    pub fn root(&self) -> &std::path::Path {
        self.store.root()
    }

    pub fn capacity_n(&self) -> u64 {
        self.store.capacity_n()
    }

    pub fn chains(&self) -> &[CircledBlockchain] {
        &self.state.circled
    }

    pub fn super_chain(&self) -> &SuperBlockchain {
        &self.state.super_chain
    }

    pub fn receipts(&self) -> &ReceiptsState {
        &self.state.receipts
    }

    /// The newest (only writable) chain.
    pub fn open_chain(&self) -> &CircledBlockchain {
        self.state.circled.last().expect("a ledger always has an open chain")
    }

    pub fn total_data_blocks(&self) -> u64 {
        self.state.total_data_blocks()
    }

    pub fn total_blocks(&self) -> u64 {
        self.state.total_blocks()
    }

    /// Appends one payload digest. Filling the chain to capacity seals it
    /// and rotates: terminal → super block → next chain's genesis →
    /// anchoring submission (when a backend is attached), each step
    /// durable before the next.
    pub fn submit_digest(
        &mut self,
        digest: Hash,
        now_ms: i64,
        anchor: Option<AnchorWith<'_>>,
    ) -> Result<Submission, LedgerError> {
        let capacity = self.capacity_n();
        let chain = self.state.circled.last_mut().expect("open chain exists");
        let chain_id = chain.chain_id;
        let block = chain.append_data(&digest, now_ms)?.clone();
        self.store.append_chain_block(chain_id, &block)?;

        let mut sealed = false;
        let mut sb_index = None;
        let mut ticket = None;
        if self.state.circled.last().expect("open chain exists").data_block_count() == capacity {
            let chain = self.state.circled.last_mut().expect("open chain exists");
            let terminal = chain.seal(now_ms)?.clone();
            self.store.append_chain_block(chain_id, &terminal)?;
            let (sb, t) = self.rotate(now_ms, anchor)?;
            sealed = true;
            sb_index = Some(sb);
            ticket = t;
        }
        Ok(Submission {
            digest,
            chain_id,
            block_index: block.index,
            sealed,
            sb_index,
            ticket,
        })
    }

    /// Seals the open chain at its current size (at least one data block)
    /// and rotates, exactly as a capacity-triggered seal would.
    pub fn seal_open_chain(
        &mut self,
        now_ms: i64,
        anchor: Option<AnchorWith<'_>>,
    ) -> Result<SealOutcome, LedgerError> {
        let chain = self.state.circled.last_mut().expect("open chain exists");
        let chain_id = chain.chain_id;
        let data_blocks = chain.data_block_count();
        let terminal = chain.seal_partial(now_ms)?.clone();
        self.store.append_chain_block(chain_id, &terminal)?;
        let (sb_index, ticket) = self.rotate(now_ms, anchor)?;
        Ok(SealOutcome { chain_id, data_blocks, sb_index, ticket, next_chain_id: chain_id + 1 })
    }

    /// Promotes the just-sealed newest chain into a super block and starts
    /// the successor chain. Returns the super block index and the
    /// anchoring ticket, if a backend is attached.
    fn rotate(
        &mut self,
        now_ms: i64,
        anchor: Option<AnchorWith<'_>>,
    ) -> Result<(u64, Option<AnchorTicket>), LedgerError> {
        let sealed = self.state.circled.last().expect("open chain exists");
        let terminal = sealed.terminal().expect("rotate is called on a sealed chain").clone();
        let next_id = sealed.chain_id + 1;

        let sb = self.state.super_chain.make_super_block(&terminal, now_ms)?.clone();
        self.store.append_super_block(&sb)?;

        let genesis = new_relative_genesis(&terminal, now_ms)?;
        self.store.append_chain_block(next_id, &genesis)?;
        self.state.circled.push(CircledBlockchain::from_parts(
            next_id,
            self.capacity_n(),
            vec![genesis],
        ));

        let ticket = match anchor {
            Some((backend, gas)) => Some(self.submit_anchor(backend, gas, sb.index, now_ms)?),
            None => None,
        };
        Ok((sb.index, ticket))
    }

    fn submit_anchor(
        &mut self,
        backend: &dyn AnchorBackend,
        gas: GasPrice,
        sb_index: u64,
        now_ms: i64,
    ) -> Result<AnchorTicket, LedgerError> {
        let payload = self.state.super_chain.blocks[sb_index as usize].current_hash.clone();
        let ticket = backend.submit(&payload, gas, now_ms)?;
        let event = ReceiptEvent::Submitted { sb_index, ticket: ticket.clone() };
        // Fold first: if the backend handed us a conflicting ticket id we
        // must find out *before* the event is on disk.
        self.state
            .receipts
            .apply(event.clone())
            .map_err(LedgerError::ReceiptConflict)?;
        self.store.append_receipt_event(&event)?;
        Ok(ticket)
    }

    /// Polls every super block whose latest ticket is unconfirmed. Newly
    /// confirmed receipts are persisted and returned. A ticket the backend
    /// no longer knows (it restarted) is re-submitted when `resubmit_gas`
    /// is given, otherwise left alone.
    pub fn poll_pending(
        &mut self,
        backend: &dyn AnchorBackend,
        resubmit_gas: Option<GasPrice>,
        now_ms: i64,
    ) -> Result<Vec<AnchorReceipt>, LedgerError> {
        let mut confirmed = Vec::new();
        for (sb_index, ticket_id) in self.state.receipts.unconfirmed() {
            match backend.poll(&ticket_id, now_ms) {
                Ok(PollOutcome::Confirmed(receipt)) => {
                    self.record_receipt(receipt.clone())?;
                    confirmed.push(receipt);
                }
                Ok(PollOutcome::Pending) => {}
                Err(AnchorError::UnknownTicket(_)) => {
                    if let Some(gas) = resubmit_gas {
                        self.submit_anchor(backend, gas, sb_index, now_ms)?;
                    }
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(confirmed)
    }

    /// Submits anchoring for super blocks that have no ticket at all
    /// (rotation was interrupted before the submission step, or the ledger
    /// previously ran without a backend).
    pub fn anchor_missing(
        &mut self,
        backend: &dyn AnchorBackend,
        gas: GasPrice,
        now_ms: i64,
    ) -> Result<Vec<AnchorTicket>, LedgerError> {
        let mut tickets = Vec::new();
        for sb_index in self.state.receipts.unanchored(self.state.super_chain.super_block_count())
        {
            tickets.push(self.submit_anchor(backend, gas, sb_index, now_ms)?);
        }
        Ok(tickets)
    }

    /// Polls the latest ticket for one super block and persists the
    /// receipt if it just confirmed. Returns the receipt when confirmed
    /// (now or earlier).
    pub fn poll_sb(
        &mut self,
        backend: &dyn AnchorBackend,
        sb_index: u64,
        now_ms: i64,
    ) -> Result<Option<AnchorReceipt>, LedgerError> {
        let Some(entry) = self.state.receipts.latest_for_sb(sb_index) else {
            return Ok(None);
        };
        if let Some(receipt) = &entry.receipt {
            return Ok(Some(receipt.clone()));
        }
        let ticket_id = entry.ticket.ticket_id.clone();
        match backend.poll(&ticket_id, now_ms) {
            Ok(PollOutcome::Confirmed(receipt)) => {
                self.record_receipt(receipt.clone())?;
                Ok(Some(receipt))
            }
            Ok(PollOutcome::Pending) => Ok(None),
            Err(AnchorError::UnknownTicket(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn record_receipt(&mut self, receipt: AnchorReceipt) -> Result<(), LedgerError> {
        let event = ReceiptEvent::Confirmed { receipt };
        self.state.receipts.apply(event.clone()).map_err(LedgerError::ReceiptConflict)?;
        self.store.append_receipt_event(&event)?;
        Ok(())
    }

    /// Earliest stored occurrence of a digest, with its promotion context.
    pub fn find_digest(&self, digest: &Hash) -> Option<MembershipProof> {
        find_digest(digest, &self.state.circled, &self.state.super_chain)
    }

    /// Full verification of the in-memory hierarchy (the disk-backed audit
    /// lives in [`crate::audit`]).
    pub fn verify_in_memory(&self) -> HierarchyReport {
        verify_hierarchy(&self.state.super_chain, &self.state.circled)
    }

    /// One block by position, for read APIs.
    pub fn chain_block(&self, chain_id: u64, index: u64) -> Option<&Block> {
        self.state.circled.get(chain_id as usize)?.blocks.get(index as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anchor::{LatencyModel, SimulatedAnchor};
    use crate::hash::compute_hash;
    use crate::store::load_readonly;

    fn digest(i: u64) -> Hash {
        compute_hash(format!("log file {i}").as_bytes())
    }

    fn anchor() -> SimulatedAnchor {
        SimulatedAnchor::new(LatencyModel::default(), 7).with_ticket_start(1)
    }

    #[test]
    fn submit_fills_seals_and_rotates() {
        let dir = tempfile::tempdir().unwrap();
        let mut ledger = Ledger::init(dir.path(), 3, 0).unwrap();
        let mut now = 0;
        for i in 0..2 {
            now += 10;
            let s = ledger.submit_digest(digest(i), now, None).unwrap();
            assert_eq!((s.chain_id, s.block_index, s.sealed), (0, i + 1, false));
            assert_eq!(s.sb_index, None);
        }
        now += 10;
        let s = ledger.submit_digest(digest(2), now, None).unwrap();
        assert!(s.sealed);
        assert_eq!(s.sb_index, Some(1));
        assert_eq!(s.ticket, None);
        assert_eq!(ledger.chains().len(), 2);
        assert_eq!(ledger.open_chain().chain_id, 1);
        assert_eq!(ledger.super_chain().super_block_count(), 1);
        assert!(ledger.verify_in_memory().ok);

        // The next digest lands in the fresh chain at index 1.
        let s = ledger.submit_digest(digest(3), now + 10, None).unwrap();
        assert_eq!((s.chain_id, s.block_index), (1, 1));
    }

    #[test]
    fn anchored_rotation_records_a_ticket() {
        let dir = tempfile::tempdir().unwrap();
        let backend = anchor();
        let gas = GasPrice::new(9).unwrap();
        let mut ledger = Ledger::init(dir.path(), 1, 0).unwrap();
        let s = ledger.submit_digest(digest(0), 10, Some((&backend, gas))).unwrap();
        let ticket = s.ticket.expect("rotation with a backend mints a ticket");
        assert_eq!(ticket.ticket_id, "tk-00000001");
        assert_eq!(
            ticket.payload_hash,
            ledger.super_chain().blocks[1].current_hash
        );
        let entry = ledger.receipts().latest_for_sb(1).unwrap();
        assert_eq!(entry.ticket, ticket);
        assert!(entry.receipt.is_none());

        // Not confirmed before the drawn latency elapses.
        assert!(ledger.poll_pending(&backend, None, 11).unwrap().is_empty());
        // Far future: confirmed, persisted, and idempotent.
        let confirmed = ledger.poll_pending(&backend, None, 10 + 3_600_000).unwrap();
        assert_eq!(confirmed.len(), 1);
        assert_eq!(confirmed[0].ticket_id, ticket.ticket_id);
        assert!(ledger.poll_pending(&backend, None, 10 + 3_600_000).unwrap().is_empty());

        drop(ledger);
        let (_, state) = load_readonly(dir.path()).unwrap();
        let entry = state.receipts.get(&ticket.ticket_id).unwrap();
        assert_eq!(entry.receipt.as_ref().unwrap().ticket_id, ticket.ticket_id);
    }

    #[test]
    fn seal_open_chain_rejects_empty_and_seals_partial() {
        let dir = tempfile::tempdir().unwrap();
        let mut ledger = Ledger::init(dir.path(), 100, 0).unwrap();
        let err = ledger.seal_open_chain(1, None).unwrap_err();
        assert!(matches!(err, LedgerError::Chain(ChainError::Empty { .. })), "{err}");

        ledger.submit_digest(digest(0), 5, None).unwrap();
        ledger.submit_digest(digest(1), 6, None).unwrap();
        let outcome = ledger.seal_open_chain(7, None).unwrap();
        assert_eq!(outcome.chain_id, 0);
        assert_eq!(outcome.data_blocks, 2);
        assert_eq!(outcome.sb_index, 1);
        assert_eq!(outcome.next_chain_id, 1);
        assert!(ledger.verify_in_memory().ok);
        // The early-sealed chain holds 2 data blocks; capacity still
        // governs the successor.
        assert_eq!(ledger.chains()[0].blocks.len(), 4);
        assert_eq!(ledger.open_chain().capacity_n, 100);
    }

    #[test]
    fn reopen_resumes_counts_and_finds_digests() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut ledger = Ledger::init(dir.path(), 2, 0).unwrap();
            for i in 0..5 {
                ledger.submit_digest(digest(i), 10 * (i as i64 + 1), None).unwrap();
            }
        }
        let (mut ledger, notes) = Ledger::open(dir.path()).unwrap();
        // No repairs — only informational notes about the (intentionally)
        // never-anchored super blocks.
        assert!(
            notes.iter().all(|n| matches!(n, RecoveryNote::UnanchoredSuperBlock { .. })),
            "clean ledger needs no repairs: {notes:?}"
        );
        assert_eq!(ledger.total_data_blocks(), 5);

        let proof = ledger.find_digest(&digest(2)).expect("stored digest is found");
        assert_eq!((proof.chain_id, proof.block_index), (1, 1));
        assert_eq!(proof.sb_index, Some(2));
        assert!(proof.terminal.is_some());
        assert!(ledger.find_digest(&digest(99)).is_none());

        let s = ledger.submit_digest(digest(5), 60, None).unwrap();
        assert!(s.sealed, "6th digest fills the 3rd chain of capacity 2");
        assert!(ledger.verify_in_memory().ok);
    }

    #[test]
    fn anchor_missing_covers_unanchored_rotations() {
        let dir = tempfile::tempdir().unwrap();
        let gas = GasPrice::new(20).unwrap();
        // Two rotations without a backend…
        let mut ledger = Ledger::init(dir.path(), 1, 0).unwrap();
        ledger.submit_digest(digest(0), 1, None).unwrap();
        ledger.submit_digest(digest(1), 2, None).unwrap();
        assert_eq!(ledger.receipts().unanchored(2), vec![1, 2]);
        // …then a backend arrives.
        let backend = anchor();
        let tickets = ledger.anchor_missing(&backend, gas, 100).unwrap();
        assert_eq!(tickets.len(), 2);
        assert!(ledger.receipts().unanchored(2).is_empty());
        let confirmed = ledger.poll_pending(&backend, None, 100 + 86_400_000).unwrap();
        assert_eq!(confirmed.len(), 2);
    }

    #[test]
    fn unknown_ticket_is_resubmitted_when_gas_is_given() {
        let dir = tempfile::tempdir().unwrap();
        let gas = GasPrice::new(6).unwrap();
        let mut ledger = Ledger::init(dir.path(), 1, 0).unwrap();
        // Submit against a backend that then "restarts" (a fresh instance
        // that has never heard of the ticket).
        let first = anchor();
        ledger.submit_digest(digest(0), 1, Some((&first, gas))).unwrap();
        let restarted =
            SimulatedAnchor::new(LatencyModel::default(), 99).with_ticket_start(
                ledger.receipts().max_ticket_number() + 1,
            );
        // Without gas: left alone.
        assert!(ledger.poll_pending(&restarted, None, 50).unwrap().is_empty());
        assert_eq!(ledger.receipts().unconfirmed().len(), 1);
        // With gas: re-submitted under a fresh ticket, old one superseded.
        assert!(ledger.poll_pending(&restarted, Some(gas), 50).unwrap().is_empty());
        let entry = ledger.receipts().latest_for_sb(1).unwrap();
        assert_eq!(entry.ticket.ticket_id, "tk-00000002");
        let old = ledger.receipts().get("tk-00000001").unwrap();
        assert_eq!(old.superseded_by.as_deref(), Some("tk-00000002"));
        // The replacement confirms normally.
        let confirmed = ledger.poll_pending(&restarted, Some(gas), 50 + 86_400_000).unwrap();
        assert_eq!(confirmed.len(), 1);
        assert_eq!(confirmed[0].ticket_id, "tk-00000002");
    }

    #[test]
    fn poll_sb_confirms_and_persists_one_super_block() {
        let dir = tempfile::tempdir().unwrap();
        let backend = anchor();
        let gas = GasPrice::new(9).unwrap();
        let mut ledger = Ledger::init(dir.path(), 1, 0).unwrap();
        ledger.submit_digest(digest(0), 10, Some((&backend, gas))).unwrap();
        assert!(ledger.poll_sb(&backend, 1, 11).unwrap().is_none());
        let receipt = ledger
            .poll_sb(&backend, 1, 10 + 86_400_000)
            .unwrap()
            .expect("confirms in the far future");
        assert_eq!(receipt.latency_ms as i64, receipt.confirmed_at - 10);
        // Cached thereafter, and unknown super blocks return None.
        assert!(ledger.poll_sb(&backend, 1, 11).unwrap().is_some());
        assert!(ledger.poll_sb(&backend, 7, 11).unwrap().is_none());
    }
}
