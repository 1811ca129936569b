//! Offline audit of a ledger directory.
//!
//! This is the read-side counterpart of [`crate::ledger`]: it re-reads the
//! files byte-strictly ([`crate::store::load_readonly`]) and runs the full
//! hierarchy verification on what is actually on disk, ignoring any live
//! in-memory state. Every front end (command line, HTTP service) reports
//! audits through these types, so their verdicts agree field for field.
//!
//! The caller is responsible for exclusivity: either hold the ledger lock
//! (see [`crate::store::lock_ledger`]) or be the process that already owns
//! it and is not writing concurrently.

use std::path::Path;

use serde::Serialize;

use crate::hash::Hash;
use crate::hierarchy::{find_digest, verify_hierarchy, MembershipProof};
use crate::report::HierarchyReport;
use crate::store::{load_readonly, Corruption};

/// Size summary of a loaded ledger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LedgerSummary {
    pub capacity_n: u64,
    pub chain_count: u64,
    pub super_block_count: u64,
    pub total_blocks: u64,
    pub data_block_count: u64,
}

/// Outcome of a full disk audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    /// True only when the files were readable *and* the hierarchy
    /// verified end to end.
    pub ok: bool,
    /// False when the files could not even be parsed; `corruption` then
    /// says where.
    pub readable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corruption: Option<Corruption>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<LedgerSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<HierarchyReport>,
}

/// Audit plus an optional membership lookup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DigestAudit {
    #[serde(flatten)]
    pub audit: AuditReport,
    pub digest: Hash,
    pub found: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proof: Option<MembershipProof>,
}

/// Re-reads and fully verifies the ledger at `root`.
pub fn audit(root: &Path) -> AuditReport {
    match load_readonly(root) {
        Err(e) => AuditReport {
            ok: false,
            readable: false,
            corruption: Some(e.to_corruption()),
            summary: None,
            hierarchy: None,
        },
        Ok((manifest, state)) => {
            let hierarchy = verify_hierarchy(&state.super_chain, &state.circled);
            AuditReport {
                ok: hierarchy.ok,
                readable: true,
                corruption: None,
                summary: Some(LedgerSummary {
                    capacity_n: manifest.capacity_n,
                    chain_count: state.circled.len() as u64,
                    super_block_count: state.super_chain.super_block_count(),
                    total_blocks: state.total_blocks(),
                    data_block_count: state.total_data_blocks(),
                }),
                hierarchy: Some(hierarchy),
            }
        }
    }
}

/// Audits the ledger and looks one digest up in what was read. The lookup
/// is best-effort even when verification fails — a caller asking about a
/// digest in a tampered ledger learns both facts at once.
pub fn audit_digest(root: &Path, digest: &Hash) -> DigestAudit {
    match load_readonly(root) {
        Err(e) => DigestAudit {
            audit: AuditReport {
                ok: false,
                readable: false,
                corruption: Some(e.to_corruption()),
                summary: None,
                hierarchy: None,
            },
            digest: digest.clone(),
            found: false,
            proof: None,
        },
        Ok((manifest, state)) => {
            let hierarchy = verify_hierarchy(&state.super_chain, &state.circled);
            let proof = find_digest(digest, &state.circled, &state.super_chain);
            DigestAudit {
                audit: AuditReport {
                    ok: hierarchy.ok,
                    readable: true,
                    corruption: None,
                    summary: Some(LedgerSummary {
                        capacity_n: manifest.capacity_n,
                        chain_count: state.circled.len() as u64,
                        super_block_count: state.super_chain.super_block_count(),
                        total_blocks: state.total_blocks(),
                        data_block_count: state.total_data_blocks(),
                    }),
                    hierarchy: Some(hierarchy),
                },
                digest: digest.clone(),
                found: proof.is_some(),
                proof,
            }
        }
    }
}
