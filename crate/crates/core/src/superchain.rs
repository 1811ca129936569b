//! The super blockchain: second level of the hierarchy.
//!
//! The super chain starts with a super genesis block and grows one super
//! block per sealed circled chain, in sealing order, with no capacity
//! bound. A super block's data embeds the *complete* six-field
//! serialization of the terminal block it promotes, so the super chain
//! alone — a tiny structure compared to the circled chains it covers —
//! pins the content of every sealed chain.

use crate::block::{verify_block, Block, BlockParseError, BlockType, BlockVerdict, SUPER_GENESIS_DATA};
use crate::circled::ChainError;
use crate::hash::Hash;
use crate::report::{ChainReport, ChainStatus, FailureReason};
use serde::Serialize;

/// The append-only chain of super blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuperBlockchain {
    pub blocks: Vec<Block>,
}

impl SuperBlockchain {
    /// Starts a super chain with its genesis block.
    pub fn new(timestamp: i64) -> Self {
        let genesis = Block::new(
            0,
            timestamp,
            BlockType::SuperGenesis,
            SUPER_GENESIS_DATA.into(),
            Hash::zero(),
        );
        SuperBlockchain { blocks: vec![genesis] }
    }

    /// Reassembles a super chain from persisted blocks without verifying;
    /// loaders audit separately.
    pub fn from_parts(blocks: Vec<Block>) -> Self {
        SuperBlockchain { blocks }
    }

    /// Number of super blocks (excludes the genesis).
    pub fn super_block_count(&self) -> u64 {
        (self.blocks.len() as u64).saturating_sub(1)
    }

    /// Promotes a sealed chain's terminal block into a new super block and
    /// returns it.
    ///
    /// The terminal is re-verified first: a super block is a durable public
    /// commitment, so it must never be minted over a tampered input.
    pub fn make_super_block(
        &mut self,
        terminal: &Block,
        timestamp: i64,
    ) -> Result<&Block, ChainError> {
        if terminal.block_type != BlockType::Terminal {
            return Err(ChainError::NotTerminal { found: terminal.block_type });
        }
        if terminal.recompute_hash() != terminal.current_hash {
            return Err(ChainError::TamperedTerminal);
        }
        let prev = self.blocks.last().expect("super chain always has a genesis");
        let block = Block::new(
            prev.index + 1,
            timestamp,
            BlockType::Super,
            terminal.serialize_full(),
            prev.current_hash.clone(),
        );
        self.blocks.push(block);
        Ok(self.blocks.last().unwrap())
    }
}

/// Parses the terminal block a super block embeds and checks the embedded
/// record is internally consistent (its stored hash matches its fields).
/// One hash invocation on success.
pub fn embedded_terminal(super_block: &Block) -> Result<Block, EmbeddedTerminalError> {
    if super_block.block_type != BlockType::Super {
        return Err(EmbeddedTerminalError::NotASuperBlock(super_block.block_type));
    }
    let terminal = Block::parse_full(&super_block.data)?;
    if terminal.block_type != BlockType::Terminal {
        return Err(EmbeddedTerminalError::NotATerminal(terminal.block_type));
    }
    if terminal.recompute_hash() != terminal.current_hash {
        return Err(EmbeddedTerminalError::Inconsistent);
    }
    Ok(terminal)
}

/// Why a super block's payload could not be read back as a terminal block.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbeddedTerminalError {
    #[error("expected a super block, found {0}")]
    NotASuperBlock(BlockType),
    #[error("embedded record is a {0} block, not a terminal block")]
    NotATerminal(BlockType),
    #[error("embedded serialization does not parse: {0}")]
    Parse(#[from] BlockParseError),
    #[error("embedded terminal's stored hash does not match its fields")]
    Inconsistent,
}

/// Verifies the super chain's own structure: genesis shape, stored hashes,
/// back-links, indexes and types.
///
/// Deliberately does **not** open the embedded terminals or touch circled
/// chains — that is [`crate::hierarchy::verify_hierarchy`]'s job. The cost
/// is therefore one hash per block: a super chain with `S` super blocks
/// audits in exactly `S + 1` hash invocations no matter how large the
/// circled chains underneath it are.
pub fn verify_super_chain(chain: &SuperBlockchain) -> ChainReport {
    let mut hashes = 0u64;
    let mut status = ChainStatus::Ok;

    'walk: {
        let Some(genesis) = chain.blocks.first() else {
            status = ChainStatus::Failed { index: 0, reason: FailureReason::WrongBlockType };
            break 'walk;
        };
        if genesis.block_type != BlockType::SuperGenesis
            || genesis.data != SUPER_GENESIS_DATA
            || genesis.previous_hash != Hash::zero()
        {
            status = ChainStatus::Failed { index: 0, reason: FailureReason::BadGenesis };
            break 'walk;
        }

        let mut expected_prev = Hash::zero();
        for (pos, block) in chain.blocks.iter().enumerate() {
            hashes += 1;
            match verify_block(block, &expected_prev) {
                BlockVerdict::Ok => {}
                BlockVerdict::HashMismatch => {
                    status = ChainStatus::Failed {
                        index: pos as u64,
                        reason: FailureReason::HashMismatch,
                    };
                    break 'walk;
                }
                BlockVerdict::LinkBroken => {
                    status = ChainStatus::Failed {
                        index: pos as u64,
                        reason: FailureReason::LinkBroken,
                    };
                    break 'walk;
                }
            }
            if block.index != pos as u64 {
                status =
                    ChainStatus::Failed { index: pos as u64, reason: FailureReason::IndexMismatch };
                break 'walk;
            }
            let type_ok = match block.block_type {
                BlockType::SuperGenesis => pos == 0,
                BlockType::Super => pos > 0,
                _ => false,
            };
            if !type_ok {
                status =
                    ChainStatus::Failed { index: pos as u64, reason: FailureReason::WrongBlockType };
                break 'walk;
            }
            expected_prev = block.current_hash.clone();
        }
    }

    ChainReport {
        chain_id: None,
        status,
        blocks_checked: chain.blocks.len() as u64,
        hash_invocations: hashes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circled::CircledBlockchain;
    use crate::hash::compute_hash;

    fn sealed_chain(n: u64, t0: i64, chain_id: u64, prev_terminal: Option<&Block>) -> CircledBlockchain {
        let mut c = match prev_terminal {
            None => CircledBlockchain::first(n, t0).unwrap(),
            Some(t) => CircledBlockchain::next(chain_id, n, t, t0).unwrap(),
        };
        for i in 0..n {
            c.append_data(&compute_hash(format!("p{chain_id}-{i}").as_bytes()), t0 + 1 + i as i64)
                .unwrap();
        }
        c.seal(t0 + 100).unwrap();
        c
    }

    // Frozen with an independent SHA-256 implementation: super genesis at
    // t=0, and the super block (t=3000) promoting the n=1 frozen chain's
    // terminal from the circled-chain tests.
    const SUPER_GENESIS_TS0_HASH: &str =
        "69ad966a34fd89c1642fabcd1238ad676947e808b4abc7a9343ba4c875a94fa1";
    const SB1_HASH: &str = "bd45e7e5cd92435c5dfa92cb68c5827e9b8527529d0319d709714d393f031e4c";

    #[test]
    fn super_genesis_matches_independent_oracle() {
        let sc = SuperBlockchain::new(0);
        assert_eq!(sc.blocks[0].current_hash.as_str(), SUPER_GENESIS_TS0_HASH);
    }

    #[test]
    fn super_block_embeds_full_terminal_and_matches_oracle() {
        let mut c = CircledBlockchain::first(1, 0).unwrap();
        c.append_data(
            &Hash::from_hex("2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824")
                .unwrap(),
            1000,
        )
        .unwrap();
        let terminal = c.seal(2000).unwrap().clone();

        let mut sc = SuperBlockchain::new(0);
        let sb = sc.make_super_block(&terminal, 3000).unwrap();
        assert_eq!(sb.current_hash.as_str(), SB1_HASH);
        assert_eq!(sb.data, terminal.serialize_full());

        let back = embedded_terminal(&sc.blocks[1]).unwrap();
        assert_eq!(back, terminal);
    }

    #[test]
    fn two_sealed_chains_give_chained_super_blocks() {
        let c0 = sealed_chain(2, 0, 0, None);
        let c1 = sealed_chain(2, 200, 1, Some(c0.terminal().unwrap()));

        let mut sc = SuperBlockchain::new(0);
        sc.make_super_block(c0.terminal().unwrap(), 300).unwrap();
        sc.make_super_block(c1.terminal().unwrap(), 400).unwrap();

        assert_eq!(sc.blocks[1].index, 1);
        assert_eq!(sc.blocks[2].index, 2);
        assert_eq!(sc.blocks[2].previous_hash, sc.blocks[1].current_hash);
        assert_eq!(verify_super_chain(&sc).status, ChainStatus::Ok);
    }

    #[test]
    fn promotion_rejects_non_terminal_and_tampered_input() {
        let c = sealed_chain(1, 0, 0, None);
        let mut sc = SuperBlockchain::new(0);
        assert_eq!(
            sc.make_super_block(&c.blocks[1], 10),
            Err(ChainError::NotTerminal { found: BlockType::Data })
        );
        let mut forged = c.terminal().unwrap().clone();
        forged.timestamp += 1;
        assert_eq!(sc.make_super_block(&forged, 10), Err(ChainError::TamperedTerminal));
        assert_eq!(sc.super_block_count(), 0);
    }

    #[test]
    fn verify_costs_one_hash_per_block_regardless_of_chain_size() {
        // Ten chains of n=100 promote into ten super blocks; auditing the
        // super chain alone costs 11 hash invocations, not 1041.
        let mut sc = SuperBlockchain::new(0);
        let mut prev: Option<CircledBlockchain> = None;
        for id in 0..10 {
            let c = sealed_chain(
                100,
                id as i64 * 1000,
                id,
                prev.as_ref().map(|p| p.terminal().unwrap()),
            );
            sc.make_super_block(c.terminal().unwrap(), id as i64 * 1000 + 500).unwrap();
            prev = Some(c);
        }
        let r = verify_super_chain(&sc);
        assert_eq!(r.status, ChainStatus::Ok);
        assert_eq!(r.blocks_checked, 11);
        assert_eq!(r.hash_invocations, 11);
    }

    #[test]
    fn verify_locates_tampered_super_block() {
        let c0 = sealed_chain(1, 0, 0, None);
        let c1 = sealed_chain(1, 100, 1, Some(c0.terminal().unwrap()));
        let mut sc = SuperBlockchain::new(0);
        sc.make_super_block(c0.terminal().unwrap(), 10).unwrap();
        sc.make_super_block(c1.terminal().unwrap(), 20).unwrap();

        // Tampering the embedded payload of super block 1 breaks its hash.
        let mut bad = sc.clone();
        bad.blocks[1].data.replace_range(0..1, "9");
        assert_eq!(
            verify_super_chain(&bad).status,
            ChainStatus::Failed { index: 1, reason: FailureReason::HashMismatch }
        );

        // A dropped super block breaks the successor's link or index.
        let mut gap = sc.clone();
        gap.blocks.remove(1);
        assert!(!verify_super_chain(&gap).status.is_ok());
    }

    #[test]
    fn embedded_terminal_rejects_garbage() {
        let sc = SuperBlockchain::new(0);
        assert!(matches!(
            embedded_terminal(&sc.blocks[0]),
            Err(EmbeddedTerminalError::NotASuperBlock(BlockType::SuperGenesis))
        ));

        let c = sealed_chain(1, 0, 0, None);
        let mut sc = SuperBlockchain::new(0);
        sc.make_super_block(c.terminal().unwrap(), 10).unwrap();
        let mut sb = sc.blocks[1].clone();
        // Flip a hex character inside the embedded terminal's stored hash;
        // the embedded record no longer agrees with itself.
        let flipped = if sb.data.ends_with('0') { "1" } else { "0" };
        sb.data.replace_range(sb.data.len() - 1.., flipped);
        assert_eq!(embedded_terminal(&sb), Err(EmbeddedTerminalError::Inconsistent));
    }
}
