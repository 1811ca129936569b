//! Whole-hierarchy auditing and digest membership proofs.
//!
//! A hierarchy is the super chain plus the circled chains it covers:
//! super block `k` (k ≥ 1) must embed the terminal of circled chain
//! `k − 1`, in order, with no gaps. Only the newest circled chain may be
//! unsealed. `verify_hierarchy` checks all of it; `find_digest` locates a
//! payload digest and returns enough context to re-establish its inclusion
//! from the chain itself.

use crate::block::{Block, BlockType};
use crate::circled::{verify_circled, CircledBlockchain};
use crate::hash::Hash;
use crate::report::{ChainStatus, FailureReason, HierarchyMismatch, HierarchyReport};
use crate::superchain::{verify_super_chain, SuperBlockchain};
use serde::Serialize;

/// Verifies the super chain, every circled chain, and the promotion links
/// between the two levels.
///
/// Cross-level checks parse the terminal each super block embeds and
/// compare it against the stored terminal of the chain it covers, field
/// for field including the stored hash. The stored terminal was already
/// hash-verified inside its chain's audit, so equality needs no further
/// hashing and the report's total is exactly `Σ(nᵢ + 3) + S + 1` hash
/// invocations for `S` sealed chains of `nᵢ` data blocks each.
pub fn verify_hierarchy(
    super_chain: &SuperBlockchain,
    circled: &[CircledBlockchain],
) -> HierarchyReport {
    let super_report = verify_super_chain(super_chain);
    let mut hash_invocations = super_report.hash_invocations;
    let mut mismatches = Vec::new();
    let mut circled_reports = Vec::with_capacity(circled.len());

    // Per-chain structural audits.
    for (pos, chain) in circled.iter().enumerate() {
        if chain.chain_id != pos as u64 {
            mismatches.push(HierarchyMismatch {
                chain_id: chain.chain_id,
                reason: FailureReason::IndexMismatch,
            });
        }
        let report = verify_circled(chain);
        hash_invocations += report.hash_invocations;
        if report.status == ChainStatus::OkPartial && pos + 1 != circled.len() {
            mismatches.push(HierarchyMismatch {
                chain_id: chain.chain_id,
                reason: FailureReason::UnsealedInterior,
            });
        }
        circled_reports.push(report);
    }

    // Relative genesis back-links: chain k must chain onto terminal k−1.
    for pair in circled.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let genesis_ok = match (prev.terminal(), next.blocks.first()) {
            (Some(t), Some(g)) => {
                g.block_type == BlockType::RelativeGenesis && g.previous_hash == t.current_hash
            }
            _ => false,
        };
        if !genesis_ok {
            mismatches.push(HierarchyMismatch {
                chain_id: next.chain_id,
                reason: FailureReason::LinkBroken,
            });
        }
    }

    // Promotion coverage: super block k ↔ sealed chain k−1.
    for (k, sb) in super_chain.blocks.iter().enumerate().skip(1) {
        let covered = k as u64 - 1;
        match circled.get(covered as usize) {
            None => mismatches.push(HierarchyMismatch {
                chain_id: covered,
                reason: FailureReason::MissingCircledChain,
            }),
            Some(chain) => match Block::parse_full(&sb.data) {
                Err(_) => mismatches.push(HierarchyMismatch {
                    chain_id: covered,
                    reason: FailureReason::EmbeddedTerminalInvalid,
                }),
                Ok(embedded) => {
                    if embedded.block_type != BlockType::Terminal {
                        mismatches.push(HierarchyMismatch {
                            chain_id: covered,
                            reason: FailureReason::EmbeddedTerminalInvalid,
                        });
                    } else if chain.terminal() != Some(&embedded) {
                        mismatches.push(HierarchyMismatch {
                            chain_id: covered,
                            reason: FailureReason::TerminalMismatch,
                        });
                    }
                }
            },
        }
    }

    // Every sealed chain must already be covered by a super block; an
    // uncovered sealed chain means promotion was lost or pruned.
    let covered_chains = super_chain.super_block_count();
    for chain in circled.iter().filter(|c| c.sealed) {
        if chain.chain_id >= covered_chains {
            mismatches.push(HierarchyMismatch {
                chain_id: chain.chain_id,
                reason: FailureReason::MissingSuperBlock,
            });
        }
    }

    let ok = super_report.status.is_ok()
        && circled_reports.iter().all(|r| r.status.is_ok())
        && mismatches.is_empty();

    HierarchyReport {
        ok,
        super_chain: super_report,
        circled: circled_reports,
        mismatches,
        hash_invocations,
    }
}

/// Where a payload digest lives in the hierarchy, plus the promotion
/// context needed to re-verify its inclusion: re-run `verify_circled` on
/// chain `chain_id`, then (for sealed chains) check `terminal` appears
/// verbatim inside super block `sb_index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MembershipProof {
    pub chain_id: u64,
    pub block_index: u64,
    /// Terminal of the containing chain; absent while that chain is open.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub terminal: Option<Block>,
    /// Index of the super block embedding that terminal; absent until the
    /// chain is promoted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sb_index: Option<u64>,
}

/// Linear scan for `digest` across every data block of every chain.
///
/// Duplicate submissions are legal, so the earliest occurrence wins:
/// lowest chain id, then lowest block index.
pub fn find_digest(
    digest: &Hash,
    circled: &[CircledBlockchain],
    super_chain: &SuperBlockchain,
) -> Option<MembershipProof> {
    for chain in circled {
        for block in &chain.blocks {
            if block.block_type == BlockType::Data && block.data == digest.as_str() {
                let sb_index = chain
                    .terminal()
                    .map(|_| chain.chain_id + 1)
                    .filter(|sb| *sb <= super_chain.super_block_count());
                return Some(MembershipProof {
                    chain_id: chain.chain_id,
                    block_index: block.index,
                    terminal: chain.terminal().cloned(),
                    sb_index,
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::compute_hash;
    use crate::superchain::embedded_terminal;

    /// Builds a hierarchy of `chains` sealed chains of capacity `n`, plus
    /// (optionally) one open chain holding `open_blocks` digests.
    pub(crate) fn build_hierarchy(
        n: u64,
        chains: u64,
        open_blocks: u64,
        t0: i64,
    ) -> (SuperBlockchain, Vec<CircledBlockchain>) {
        let mut t = t0;
        let mut tick = || {
            t += 1;
            t
        };
        let mut sc = SuperBlockchain::new(tick());
        let mut all = Vec::new();
        for id in 0..chains {
            let mut c = if id == 0 {
                CircledBlockchain::first(n, tick()).unwrap()
            } else {
                let prev: &CircledBlockchain = all.last().unwrap();
                CircledBlockchain::next(id, n, prev.terminal().unwrap(), tick()).unwrap()
            };
            for i in 0..n {
                c.append_data(&compute_hash(format!("d{id}-{i}").as_bytes()), tick()).unwrap();
            }
            let terminal = c.seal(tick()).unwrap().clone();
            sc.make_super_block(&terminal, tick()).unwrap();
            all.push(c);
        }
        if open_blocks > 0 || chains == 0 {
            let mut c = if chains == 0 {
                CircledBlockchain::first(n, tick()).unwrap()
            } else {
                let prev: &CircledBlockchain = all.last().unwrap();
                CircledBlockchain::next(chains, n, prev.terminal().unwrap(), tick()).unwrap()
            };
            for i in 0..open_blocks {
                c.append_data(&compute_hash(format!("open-{i}").as_bytes()), tick()).unwrap();
            }
            all.push(c);
        }
        (sc, all)
    }

    #[test]
    fn clean_hierarchy_verifies_with_exact_hash_budget() {
        let (sc, chains) = build_hierarchy(10, 4, 0, 0);
        let r = verify_hierarchy(&sc, &chains);
        assert!(r.ok, "{r:?}");
        // 4 chains à (10+3) hashes plus the 5-block super chain; the
        // embedded-terminal comparisons are hash-free.
        assert_eq!(r.hash_invocations, 4 * 13 + 5);
    }

    #[test]
    fn super_chain_audit_is_constant_in_chain_size() {
        let (sc, chains) = build_hierarchy(100, 10, 0, 0);
        let full = verify_hierarchy(&sc, &chains);
        assert!(full.ok);
        let quick = verify_super_chain(&sc);
        assert_eq!(quick.hash_invocations, 11);
        // The full audit pays for every circled chain: Σ(100+3) + 10 + 1.
        assert_eq!(full.hash_invocations, 10 * 103 + 11);
    }

    #[test]
    fn open_tail_chain_is_accepted() {
        let (sc, chains) = build_hierarchy(5, 2, 3, 0);
        let r = verify_hierarchy(&sc, &chains);
        assert!(r.ok, "{r:?}");
        assert_eq!(r.circled.last().unwrap().status, ChainStatus::OkPartial);
    }

    #[test]
    fn unsealed_interior_chain_is_flagged() {
        let (sc, mut chains) = build_hierarchy(3, 2, 2, 0);
        // Forge an "open" chain in the middle by dropping the terminal of
        // chain 0 — this also orphans super block 1 and chain 1's genesis.
        chains[0].blocks.pop();
        chains[0].sealed = false;
        let r = verify_hierarchy(&sc, &chains);
        assert!(!r.ok);
        assert!(r
            .mismatches
            .iter()
            .any(|m| m.chain_id == 0 && m.reason == FailureReason::UnsealedInterior));
    }

    #[test]
    fn swapped_super_block_coverage_is_flagged() {
        let (mut sc, chains) = build_hierarchy(2, 3, 0, 0);
        sc.blocks.swap(1, 2);
        let r = verify_hierarchy(&sc, &chains);
        assert!(!r.ok);
    }

    #[test]
    fn super_block_for_missing_chain_is_flagged() {
        let (sc, mut chains) = build_hierarchy(2, 2, 0, 0);
        chains.pop();
        let r = verify_hierarchy(&sc, &chains);
        assert!(!r.ok);
        assert!(r
            .mismatches
            .iter()
            .any(|m| m.chain_id == 1 && m.reason == FailureReason::MissingCircledChain));
    }

    #[test]
    fn sealed_chain_without_super_block_is_flagged() {
        let (mut sc, chains) = build_hierarchy(2, 2, 0, 0);
        sc.blocks.pop();
        let r = verify_hierarchy(&sc, &chains);
        assert!(!r.ok);
        assert!(r
            .mismatches
            .iter()
            .any(|m| m.chain_id == 1 && m.reason == FailureReason::MissingSuperBlock));
    }

    #[test]
    fn terminal_rewrite_is_caught_by_embedding_comparison() {
        // Rewrite chain 0's terminal and patch every hash inside that chain
        // so the chain verifies in isolation; the super block still pins
        // the original terminal, and chain 1's genesis still links to it.
        let (sc, mut chains) = build_hierarchy(2, 2, 0, 0);
        let c0 = &mut chains[0];
        let last = c0.blocks.len() - 1;
        c0.blocks[1].data = compute_hash(b"replacement payload").as_str().to_string();
        for i in 1..=last {
            let prev_hash = c0.blocks[i - 1].current_hash.clone();
            c0.blocks[i].previous_hash = prev_hash;
            if c0.blocks[i].block_type == BlockType::Terminal {
                let aggregate = crate::circled::CircledBlockchain::from_parts(
                    0,
                    2,
                    c0.blocks[..last].to_vec(),
                )
                .aggregate_digest();
                c0.blocks[i].data = aggregate.as_str().to_string();
            }
            c0.blocks[i].current_hash = c0.blocks[i].recompute_hash();
        }
        assert!(verify_circled(&chains[0]).status.is_ok(), "rewrite must self-verify");

        let r = verify_hierarchy(&sc, &chains);
        assert!(!r.ok, "hierarchy must catch the rewritten chain");
        assert!(r.mismatches.iter().any(|m| m.chain_id == 0
            && matches!(
                m.reason,
                FailureReason::TerminalMismatch | FailureReason::LinkBroken
            )));
    }

    #[test]
    fn find_digest_returns_full_promotion_context() {
        let (sc, chains) = build_hierarchy(3, 2, 2, 0);
        let wanted = compute_hash(b"d1-2");
        let proof = find_digest(&wanted, &chains, &sc).unwrap();
        assert_eq!(proof.chain_id, 1);
        assert_eq!(proof.block_index, 3);
        assert_eq!(proof.terminal.as_ref(), chains[1].terminal());
        assert_eq!(proof.sb_index, Some(2));

        // Proof re-verifies: the chain audits clean and the super block at
        // sb_index embeds exactly the proof's terminal.
        assert!(verify_circled(&chains[1]).status.is_ok());
        let sb = &sc.blocks[proof.sb_index.unwrap() as usize];
        assert_eq!(embedded_terminal(sb).unwrap(), proof.terminal.unwrap());
    }

    #[test]
    fn find_digest_in_open_chain_has_no_promotion_yet() {
        let (sc, chains) = build_hierarchy(3, 1, 2, 0);
        let proof = find_digest(&compute_hash(b"open-1"), &chains, &sc).unwrap();
        assert_eq!(proof.chain_id, 1);
        assert_eq!(proof.block_index, 2);
        assert_eq!(proof.terminal, None);
        assert_eq!(proof.sb_index, None);
    }

    #[test]
    fn find_digest_misses_cleanly() {
        let (sc, chains) = build_hierarchy(3, 1, 0, 0);
        assert_eq!(find_digest(&compute_hash(b"never stored"), &chains, &sc), None);
    }

    #[test]
    fn duplicate_digest_resolves_to_earliest_occurrence() {
        let mut t = 0;
        let mut tick = || {
            t += 1;
            t
        };
        let dup = compute_hash(b"duplicated");
        let mut sc = SuperBlockchain::new(tick());
        let mut c0 = CircledBlockchain::first(2, tick()).unwrap();
        c0.append_data(&compute_hash(b"other"), tick()).unwrap();
        c0.append_data(&dup, tick()).unwrap();
        let t0 = c0.seal(tick()).unwrap().clone();
        sc.make_super_block(&t0, tick()).unwrap();
        let mut c1 = CircledBlockchain::next(1, 2, &t0, tick()).unwrap();
        c1.append_data(&dup, tick()).unwrap();
        let chains = vec![c0, c1];

        let proof = find_digest(&dup, &chains, &sc).unwrap();
        assert_eq!((proof.chain_id, proof.block_index), (0, 2));
    }
}
