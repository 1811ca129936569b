//! Core engine for a tamper-evident log-commitment ledger.
//!
//! Incoming log digests are chained into fixed-capacity *circled* chains;
//! each full chain is sealed by a terminal block carrying an aggregate
//! digest over everything before it, and every terminal is promoted into a
//! *super chain* whose blocks embed the terminal they cover. Auditing the
//! super chain alone costs one hash per super block plus one for its
//! genesis; auditing everything costs one hash per block plus one
//! aggregate per chain — the two-level design is what makes the cheap
//! audit sound.
//!
//! Module map:
//!
//! - [`hash`], [`block`] — canonical serialization and hashing of blocks;
//! - [`circled`], [`superchain`], [`hierarchy`] — the two chain levels,
//!   their verification, and membership lookups;
//! - [`report`] — verification verdict types;
//! - [`store`], [`ledger`], [`audit`] — durable persistence, the live
//!   write path, and the strict disk audit;
//! - [`anchor`] — simulated public-chain anchoring with a calibrated
//!   confirmation-latency model;
//! - [`clock`] — wall or simulated time;
//! - [`stats`] — the statistics toolkit used by the latency analysis.

pub mod anchor;
pub mod audit;
pub mod block;
pub mod circled;
pub mod clock;
pub mod hash;
pub mod hierarchy;
pub mod ledger;
pub mod report;
pub mod stats;
pub mod store;
pub mod superchain;

pub use anchor::{
    AnchorBackend, AnchorError, AnchorReceipt, AnchorTicket, GasPrice, LatencyModel, PollOutcome,
    SimulatedAnchor,
};
pub use audit::{audit, audit_digest, AuditReport, DigestAudit, LedgerSummary};
pub use block::{Block, BlockType, BlockVerdict};
pub use circled::{verify_circled, ChainError, CircledBlockchain};
pub use clock::{Clock, SimulatedClock};
pub use hash::{compute_hash, Hash, HashError, HASH_HEX_LEN};
pub use hierarchy::{find_digest, verify_hierarchy, MembershipProof};
pub use ledger::{Ledger, LedgerError, SealOutcome, Submission};
pub use report::{ChainReport, ChainStatus, FailureReason, HierarchyMismatch, HierarchyReport};
pub use store::{
    load_readonly, lock_ledger, Corruption, LedgerState, LedgerStore, Manifest, ReceiptEntry,
    ReceiptEvent, ReceiptsState, RecoveryNote, StoreError,
};
pub use superchain::{verify_super_chain, SuperBlockchain};
