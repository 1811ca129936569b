//! Verification reports.
//!
//! Verification never panics and never returns `Err` for a failed check —
//! a tampered ledger is a *result*, not an error. Reports carry the lowest
//! failing position, the reason, and the number of hash invocations spent,
//! so callers can both locate damage and reason about audit cost.

use serde::Serialize;

/// Why a block, chain, or hierarchy check failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// A block's stored hash disagrees with the recomputation over its
    /// stored fields.
    HashMismatch,
    /// A block's `previous_hash` does not equal its predecessor's
    /// `current_hash`.
    LinkBroken,
    /// A block's `index` does not match its position.
    IndexMismatch,
    /// A block has the wrong type for its position (e.g. a non-data block
    /// in the interior of a circled chain).
    WrongBlockType,
    /// A terminal block's data does not equal the recomputed aggregate
    /// digest over the chain's prior block hashes.
    AggregateMismatch,
    /// A genesis block violates its fixed shape (sentinel data, zero or
    /// terminal back-link).
    BadGenesis,
    /// A super block's embedded terminal serialization does not parse or
    /// is not internally consistent.
    EmbeddedTerminalInvalid,
    /// A super block's embedded terminal differs from the stored terminal
    /// of the circled chain it covers.
    TerminalMismatch,
    /// A super block references a circled chain that is not present.
    MissingCircledChain,
    /// A sealed circled chain has no covering super block.
    MissingSuperBlock,
    /// A circled chain other than the newest one is not sealed.
    UnsealedInterior,
}

/// Outcome of verifying one chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum ChainStatus {
    /// Every block verified; for circled chains the terminal aggregate was
    /// re-derived and matched.
    Ok,
    /// All present blocks verified but the chain is not sealed yet, so
    /// there is no terminal aggregate to check.
    OkPartial,
    /// Verification failed at `index` (lowest failing block) for `reason`.
    Failed { index: u64, reason: FailureReason },
}

impl ChainStatus {
    /// True for both full and partial success.
    pub fn is_ok(&self) -> bool {
        !matches!(self, ChainStatus::Failed { .. })
    }
}

/// Result of verifying a single chain, with its audit cost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainReport {
    /// Circled chain id, absent for the super chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_id: Option<u64>,
    #[serde(flatten)]
    pub status: ChainStatus,
    /// Number of blocks examined.
    pub blocks_checked: u64,
    /// Number of SHA-256 invocations performed by this verification.
    pub hash_invocations: u64,
}

/// A cross-chain inconsistency found while checking the hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HierarchyMismatch {
    /// The circled chain the inconsistency concerns.
    pub chain_id: u64,
    pub reason: FailureReason,
}

/// Result of a full two-level audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HierarchyReport {
    /// True iff the super chain verifies, every circled chain verifies
    /// (only the newest may be unsealed), and every super block matches
    /// its chain's stored terminal.
    pub ok: bool,
    pub super_chain: ChainReport,
    pub circled: Vec<ChainReport>,
    pub mismatches: Vec<HierarchyMismatch>,
    /// Total SHA-256 invocations across the whole audit.
    pub hash_invocations: u64,
}

impl HierarchyReport {
    /// The lowest-positioned failure, as `(chain_id, reason)`, where the
    /// super chain is reported under the chain id it covers when possible.
    pub fn first_problem(&self) -> Option<(Option<u64>, FailureReason)> {
        for c in &self.circled {
            if let ChainStatus::Failed { reason, .. } = c.status {
                return Some((c.chain_id, reason));
            }
        }
        if let ChainStatus::Failed { reason, .. } = self.super_chain.status {
            return Some((None, reason));
        }
        self.mismatches.first().map(|m| (Some(m.chain_id), m.reason))
    }
}
